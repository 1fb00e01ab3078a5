#include "jacolip/grad.hpp"

#include <algorithm>
#include <cmath>

namespace jacolip {

ParamGrads zero_grads(const Model& model) {
    ParamGrads g;
    for (const auto& w : model.weights) g.emplace_back(w.rows(), w.cols());
    return g;
}

double grads_norm(const ParamGrads& grads) {
    double s = 0.0;
    for (const auto& g : grads)
        for (double v : g.data()) s += v * v;
    return std::sqrt(s);
}

void accumulate(ParamGrads& into, const ParamGrads& from, double scale) {
    if (into.size() != from.size()) throw FatalError("accumulate: grad count mismatch");
    for (std::size_t l = 0; l < into.size(); ++l) add_in_place(into[l], from[l], scale);
}

double ce_loss(const DenseMatrix& logits, const std::vector<int>& labels,
               const std::vector<char>& mask, DenseMatrix* d_logits) {
    std::size_t n = logits.rows(), c = logits.cols();
    if (labels.size() != n || mask.size() != n)
        throw FatalError("ce_loss: label/mask length mismatch");
    std::size_t count = 0;
    for (char m : mask) count += m ? 1 : 0;
    if (count == 0) throw FatalError("ce_loss: empty mask");
    if (d_logits) *d_logits = DenseMatrix(n, c);

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= c)
            throw FatalError("ce_loss: label out of range at node " + std::to_string(i));
        const double* row = logits.row_ptr(i);
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
        double logz = mx + std::log(sum);
        total += logz - row[label];
        if (d_logits) {
            double* grow = d_logits->row_ptr(i);
            for (std::size_t j = 0; j < c; ++j)
                grow[j] = (std::exp(row[j] - mx) / sum - (static_cast<int>(j) == label ? 1.0 : 0.0)) /
                          double(count);
        }
    }
    return total / double(count);
}

double bce_edge_loss(const EdgeScores& scores, const std::vector<double>& labels,
                     std::vector<double>* d_logits) {
    std::size_t m = scores.logits.size();
    if (m == 0 || labels.size() != m) throw FatalError("bce_edge_loss: empty or mismatched input");
    if (d_logits) d_logits->assign(m, 0.0);
    double total = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
        double l = scores.logits[e], y = labels[e];
        // stable: max(l,0) - l*y + log(1 + exp(-|l|))
        total += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)));
        if (d_logits) (*d_logits)[e] = (1.0 / (1.0 + std::exp(-l)) - y) / double(m);
    }
    return total / double(m);
}

DenseMatrix edge_logit_backward(const DenseMatrix& embedding, const EdgeScores& scores,
                                const std::vector<double>& d_logits) {
    if (d_logits.size() != scores.edges.size())
        throw FatalError("edge_logit_backward: gradient count mismatch");
    DenseMatrix dz(embedding.rows(), embedding.cols());
    for (std::size_t e = 0; e < scores.edges.size(); ++e) {
        auto [u, v] = scores.edges[e];
        double g = d_logits[e];
        for (std::size_t c = 0; c < embedding.cols(); ++c) {
            dz(u, c) += g * embedding(v, c);
            dz(v, c) += g * embedding(u, c);
        }
    }
    return dz;
}

ParamGrads backward_params(const Model& model, const SparseMatrix& a_hat,
                           const ForwardCache& cache, const DenseMatrix& d_output) {
    if (cache.weight_stamp != weight_stamp(model))
        throw FatalError("backward_params: cache is stale (weights changed since forward)");
    ParamGrads grads = zero_grads(model);

    if (model.arch == Arch::SGC) {
        grads[0] = matmul(cache.propagated[0].transpose(), d_output);
        return grads;
    }

    DenseMatrix g = d_output;  // dL/dZ^L (final layer has no activation)
    for (std::size_t li = model.n_layers(); li-- > 0;) {
        grads[li] = matmul(cache.propagated[li].transpose(), g);
        if (li == 0) break;
        DenseMatrix gp = matmul(g, model.weights[li].transpose());
        DenseMatrix gh = (model.layers[li].kind == LayerKind::GraphConv) ? spmm(a_hat, gp) : gp;
        const DenseMatrix& dmask = cache.dropout_mask[li - 1];
        const DenseMatrix& rmask = cache.relu_mask[li - 1];
        if (!dmask.empty())
            for (std::size_t i = 0; i < gh.size(); ++i) gh.data()[i] *= dmask.data()[i];
        if (!rmask.empty())
            for (std::size_t i = 0; i < gh.size(); ++i) gh.data()[i] *= rmask.data()[i];
        g = std::move(gh);
    }
    return grads;
}

std::vector<double> propagation_diag(const SparseMatrix& a_hat, std::size_t power) {
    std::size_t n = a_hat.rows();
    std::vector<double> diag(n, 0.0);
    if (power == 0) {
        std::fill(diag.begin(), diag.end(), 1.0);
        return diag;
    }
    if (power == 1) {
        for (std::size_t i = 0; i < n; ++i) diag[i] = a_hat.at(i, i);
        return diag;
    }
    if (power == 2) {
        const auto& off = a_hat.offsets();
        const auto& v = a_hat.values();
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t k = off[i]; k < off[i + 1]; ++k) s += v[k] * v[k];
            diag[i] = s;  // A symmetric: (A^2)_ii = sum_k A_ik^2
        }
        return diag;
    }
    // General power via per-node matvec chains.
    std::vector<double> e(n), tmp(n);
    const auto& off = a_hat.offsets();
    const auto& ci = a_hat.col_indices();
    const auto& av = a_hat.values();
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(e.begin(), e.end(), 0.0);
        e[i] = 1.0;
        for (std::size_t p = 0; p < power; ++p) {
            std::fill(tmp.begin(), tmp.end(), 0.0);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t k = off[r]; k < off[r + 1]; ++k) tmp[r] += av[k] * e[ci[k]];
            e = tmp;
        }
        diag[i] = e[i];
    }
    return diag;
}

namespace {

bool is_two_layer_conv(const Model& model) {
    return model.n_layers() == 2 && model.layers[0].kind == LayerKind::GraphConv &&
           model.layers[1].kind == LayerKind::GraphConv &&
           model.layers[0].activation == Activation::Relu;
}

// Mixing vector m for node i in a two-layer conv stack:
//   m_c = sum_k A_hat_{ik}^2 * M^1_{kc}
std::vector<double> mixed_mask(const SparseMatrix& a_hat, const DenseMatrix& relu_mask,
                               std::size_t node) {
    std::vector<double> m(relu_mask.cols(), 0.0);
    const auto& off = a_hat.offsets();
    const auto& ci = a_hat.col_indices();
    const auto& v = a_hat.values();
    for (std::size_t k = off[node]; k < off[node + 1]; ++k) {
        double a2 = v[k] * v[k];
        const double* mrow = relu_mask.row_ptr(ci[k]);
        for (std::size_t c = 0; c < relu_mask.cols(); ++c) m[c] += a2 * mrow[c];
    }
    return m;
}

}  // namespace

NodeJacobianSet node_jacobians(const Model& model, const SparseMatrix& a_hat,
                               const ForwardCache& cache) {
    if (cache.weight_stamp != weight_stamp(model))
        throw FatalError("node_jacobians: cache is stale");
    for (const auto& d : cache.dropout_mask)
        if (!d.empty()) throw FatalError("node_jacobians: dropout must be disabled");

    std::size_t n = a_hat.rows();
    NodeJacobianSet set;
    set.mask_snapshot = cache.relu_mask;
    set.weight_stamp = cache.weight_stamp;
    set.blocks.reserve(n);

    if (model.arch == Arch::SGC) {
        DenseMatrix wt = model.weights[0].transpose();
        auto diag = propagation_diag(a_hat, model.sgc_power);
        for (std::size_t i = 0; i < n; ++i) set.blocks.push_back(scale(wt, diag[i]));
        return set;
    }
    if (!is_two_layer_conv(model))
        throw FatalError("node_jacobians: no closed form for this architecture");

    const DenseMatrix& w1 = model.weights[0];  // F_in x F1
    const DenseMatrix& w2 = model.weights[1];  // F1 x F_out
    std::size_t f_in = w1.rows(), f1 = w1.cols(), f_out = w2.cols();
    for (std::size_t i = 0; i < n; ++i) {
        auto m = mixed_mask(a_hat, cache.relu_mask[0], i);
        // J = W2^T diag(m) W1^T
        DenseMatrix j(f_out, f_in);
        for (std::size_t c = 0; c < f1; ++c) {
            if (m[c] == 0.0) continue;
            for (std::size_t out = 0; out < f_out; ++out) {
                double w2c = m[c] * w2(c, out);
                if (w2c == 0.0) continue;
                double* jrow = j.row_ptr(out);
                for (std::size_t f = 0; f < f_in; ++f) jrow[f] += w2c * w1(f, c);
            }
        }
        set.blocks.push_back(std::move(j));
    }
    return set;
}

RegGradient reg_gradient(const Model& model, const SparseMatrix& a_hat, const ForwardCache& cache,
                         const NodeJacobianSet& jacobians, std::size_t argmax_node) {
    if (jacobians.weight_stamp != weight_stamp(model))
        throw FatalError("reg_gradient: jacobians are stale");
    if (cache.weight_stamp != jacobians.weight_stamp)
        throw FatalError("reg_gradient: cache does not match the jacobians");
    RegGradient out;
    out.grads = zero_grads(model);
    const DenseMatrix& j = jacobians.blocks.at(argmax_node);
    double r = frobenius(j);
    if (r == 0.0) {
        out.degenerate = true;
        return out;
    }

    if (model.arch == Arch::SGC) {
        auto diag = propagation_diag(a_hat, model.sgc_power);
        double s = diag[argmax_node];
        // ||J||_F = |s| * ||W||_F; d/dW = s^2 W / ||J||_F
        add_in_place(out.grads[0], model.weights[0], s * s / r);
        return out;
    }
    if (!is_two_layer_conv(model))
        throw FatalError("reg_gradient: no closed form for this architecture");

    const DenseMatrix& w1 = model.weights[0];
    const DenseMatrix& w2 = model.weights[1];
    auto m = mixed_mask(a_hat, jacobians.mask_snapshot[0], argmax_node);

    // dR/dW1 = (1/R) J^T (diag(m) W2)^T ; dR/dW2 = (1/R) diag(m) W1^T J^T
    DenseMatrix c(w2.rows(), w2.cols());
    for (std::size_t row = 0; row < w2.rows(); ++row)
        for (std::size_t col = 0; col < w2.cols(); ++col) c(row, col) = m[row] * w2(row, col);
    DenseMatrix jt = j.transpose();
    out.grads[0] = scale(matmul(jt, c.transpose()), 1.0 / r);
    DenseMatrix w1t_jt = matmul(w1.transpose(), jt);
    for (std::size_t row = 0; row < w1t_jt.rows(); ++row)
        for (std::size_t col = 0; col < w1t_jt.cols(); ++col)
            out.grads[1](row, col) = m[row] * w1t_jt(row, col) / r;
    return out;
}

double fd_check(const std::function<double(const DenseMatrix&)>& f, const DenseMatrix& analytic,
                DenseMatrix point, double eps) {
    if (eps <= 0) throw FatalError("fd_check: eps must be positive");
    if (!analytic.same_shape(point)) throw FatalError("fd_check: shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < point.size(); ++i) {
        double orig = point.data()[i];
        point.data()[i] = orig + eps;
        double fp = f(point);
        point.data()[i] = orig - eps;
        double fm = f(point);
        point.data()[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw FatalError("fd_check: non-finite function value");
        double fd = (fp - fm) / (2.0 * eps);
        double a = analytic.data()[i];
        double rel = std::abs(a - fd) / std::max(std::abs(a), 1e-8);
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace jacolip
