#include "jacolip/lipschitz.hpp"

#include <cmath>
#include <sstream>

namespace jacolip {

DenseMatrix lb_matrix(const NodeJacobianSet& jacobians) {
    if (jacobians.blocks.empty()) throw FatalError("lb_matrix: no Jacobian blocks");
    std::size_t n = jacobians.blocks.size();
    std::size_t f_out = jacobians.blocks[0].rows();
    DenseMatrix lb(n, f_out);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& j = jacobians.blocks[i];
        if (j.rows() != f_out) throw FatalError("lb_matrix: inconsistent block shapes");
        auto norms = row_l2_norms(j);
        for (std::size_t c = 0; c < f_out; ++c) lb(i, c) = norms[c];
    }
    return lb;
}

std::pair<double, std::size_t> global_lip(const DenseMatrix& lb) {
    if (lb.empty()) throw FatalError("global_lip: empty LB matrix");
    auto norms = row_l2_norms(lb);
    std::size_t best = 0;
    for (std::size_t i = 1; i < norms.size(); ++i)
        if (norms[i] > norms[best]) best = i;
    return {norms[best], best};
}

double layerwise_bound(const Model& model, const SparseMatrix& a_hat, const ForwardCache& cache) {
    if (cache.weight_stamp != weight_stamp(model))
        throw FatalError("layerwise_bound: cache is stale");
    std::size_t n = a_hat.rows();

    // Per-layer diagonal propagation coefficient (A_hat)_jj, or (A_hat^K)_jj
    // for the SGC layer.
    std::vector<double> diag =
        propagation_diag(a_hat, model.arch == Arch::SGC ? model.sgc_power : 1);

    // Column norms of each layer's weights.
    std::vector<std::vector<double>> col_norms(model.n_layers());
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        const auto& w = model.weights[l];
        col_norms[l].assign(w.cols(), 0.0);
        for (std::size_t c = 0; c < w.cols(); ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < w.rows(); ++r) s += w(r, c) * w(r, c);
            col_norms[l][c] = std::sqrt(s);
        }
    }

    double best = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double prod = 1.0;
        for (std::size_t l = 0; l < model.n_layers(); ++l) {
            const auto& spec = model.layers[l];
            double a_jj = (spec.kind == LayerKind::GraphConv) ? diag[j] : 1.0;
            double inf = 0.0;
            for (std::size_t c = 0; c < spec.out_dim; ++c) {
                double gate = 1.0;
                if (spec.activation == Activation::Relu) gate = cache.relu_mask[l](j, c);
                inf = std::max(inf, gate * std::abs(a_jj) * col_norms[l][c]);
            }
            prod *= double(spec.out_dim) * inf;
        }
        best = std::max(best, prod);
    }
    return best;
}

EmpiricalLipResult empirical_lip(const Model& model, const SparseMatrix& a_hat,
                                 const DenseMatrix& x, const EmpiricalLipOptions& opts) {
    if (opts.n_probes == 0) throw FatalError("empirical_lip: n_probes must be positive");
    if (opts.eps <= 0) throw FatalError("empirical_lip: eps must be positive");

    ForwardCache base_cache;
    DenseMatrix y0 = model_forward(model, a_hat, x, base_cache);
    std::size_t n = x.rows(), f = x.cols();

    EmpiricalLipResult result;
    Rng rng = Rng(opts.seed).split(31);
    for (std::size_t p = 0; p < opts.n_probes; ++p) {
        std::size_t node = rng.uniform_index(n);
        bool done = false;
        for (int attempt = 0; attempt <= opts.retry_cap && !done; ++attempt) {
            std::vector<double> delta(f);
            double norm = 0.0;
            for (double& d : delta) {
                d = rng.normal();
                norm += d * d;
            }
            norm = std::sqrt(norm);
            if (norm == 0.0) continue;
            DenseMatrix xp = x;
            for (std::size_t c = 0; c < f; ++c) xp(node, c) += delta[c] * (opts.eps / norm);
            ForwardCache cache;
            DenseMatrix y1 = model_forward(model, a_hat, xp, cache);
            if (opts.require_same_region && !cache.masks_equal(base_cache)) continue;
            double dy = 0.0;
            for (std::size_t c = 0; c < y0.cols(); ++c) {
                double d = y1(node, c) - y0(node, c);
                dy += d * d;
            }
            result.max_ratio = std::max(result.max_ratio, std::sqrt(dy) / opts.eps);
            done = true;
        }
        if (!done) ++result.skipped;
    }
    return result;
}

Lemma1Result lemma1_check(
    const std::function<std::vector<double>(const std::vector<double>&)>& g,
    const std::vector<double>& x, const std::vector<double>& y) {
    if (x == y) throw FatalError("lemma1_check: x and y must differ");
    auto gx = g(x);
    auto gy = g(y);
    if (gx.size() != gy.size()) throw FatalError("lemma1_check: inconsistent output sizes");
    double dx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dx += (x[i] - y[i]) * (x[i] - y[i]);
    dx = std::sqrt(dx);
    double num = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < gx.size(); ++i) {
        double d = gx[i] - gy[i];
        num += d * d;
        double q = std::abs(d) / dx;
        comp += q * q;
    }
    Lemma1Result r;
    r.lhs = std::sqrt(num) / dx;
    r.rhs = std::sqrt(comp);
    r.holds = r.lhs <= r.rhs + 1e-12;
    return r;
}

LipReport lip_report(const Model& model, const SparseMatrix& a_hat, const ForwardCache& cache,
                     const NodeJacobianSet& jacobians) {
    LipReport rep;
    rep.lb_matrix = lb_matrix(jacobians);
    auto [lip, node] = global_lip(rep.lb_matrix);
    rep.global_lip = lip;
    rep.argmax_node = node;
    rep.layerwise_bound = layerwise_bound(model, a_hat, cache);
    return rep;
}

std::string LipReport::to_json() const {
    std::ostringstream out;
    out.precision(17);
    out << "{\"global_lip\": " << global_lip << ", \"layerwise_bound\": " << layerwise_bound
        << ", \"argmax_node\": " << argmax_node << ", \"empirical_lower\": ";
    if (empirical_lower)
        out << *empirical_lower;
    else
        out << "null";
    out << ", \"lb_rows\": " << lb_matrix.rows() << "}";
    return out.str();
}

}  // namespace jacolip
