#include "jacolip/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace jacolip {

std::string arch_name(Arch a) {
    switch (a) {
        case Arch::GCN: return "gcn";
        case Arch::SGC: return "sgc";
        case Arch::GAE: return "gae";
    }
    return "?";
}

Arch arch_from_name(const std::string& s) {
    if (s == "gcn") return Arch::GCN;
    if (s == "sgc") return Arch::SGC;
    if (s == "gae") return Arch::GAE;
    throw FatalError("unknown architecture: " + s);
}

double Model::weight_norm() const {
    double s = 0.0;
    for (const auto& w : weights)
        for (double v : w.data()) s += v * v;
    return std::sqrt(s);
}

void Model::validate() const {
    if (layers.empty() || layers.size() != weights.size())
        throw FatalError("model: layer/weight count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (weights[l].rows() != layers[l].in_dim || weights[l].cols() != layers[l].out_dim)
            throw FatalError("model: weight shape mismatch at layer " + std::to_string(l));
        if (l + 1 < layers.size() && layers[l].out_dim != layers[l + 1].in_dim)
            throw FatalError("model: layer dims do not chain at layer " + std::to_string(l));
    }
    if (layers.back().activation != Activation::None)
        throw FatalError("model: final layer must output logits (no activation)");
}

bool ForwardCache::masks_equal(const ForwardCache& o) const {
    if (relu_mask.size() != o.relu_mask.size()) return false;
    for (std::size_t l = 0; l < relu_mask.size(); ++l)
        if (!relu_mask[l].bit_equal(o.relu_mask[l])) return false;
    return true;
}

Model make_gcn(std::size_t in_dim, std::size_t hidden, std::size_t out_dim) {
    return make_gcn_dims(in_dim, {hidden}, out_dim);
}

Model make_gcn_dims(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                    std::size_t out_dim) {
    Model m;
    m.arch = Arch::GCN;
    std::size_t prev = in_dim;
    for (std::size_t h : hidden) {
        m.layers.push_back({LayerKind::GraphConv, prev, h, Activation::Relu});
        prev = h;
    }
    m.layers.push_back({LayerKind::GraphConv, prev, out_dim, Activation::None});
    for (const auto& spec : m.layers) m.weights.emplace_back(spec.in_dim, spec.out_dim);
    return m;
}

Model make_sgc(std::size_t in_dim, std::size_t out_dim, std::size_t power) {
    Model m;
    m.arch = Arch::SGC;
    m.sgc_power = power;
    m.layers.push_back({LayerKind::GraphConv, in_dim, out_dim, Activation::None});
    m.weights.emplace_back(in_dim, out_dim);
    return m;
}

Model make_gae(std::size_t in_dim, std::size_t hidden, std::size_t embed) {
    Model m = make_gcn_dims(in_dim, {hidden}, embed);
    m.arch = Arch::GAE;
    return m;
}

void init_params(Model& model, std::uint64_t seed) {
    Rng rng = Rng(seed).split(21);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& spec = model.layers[l];
        double bound = std::sqrt(6.0 / double(spec.in_dim + spec.out_dim));
        auto& w = model.weights[l];
        w = DenseMatrix(spec.in_dim, spec.out_dim);
        for (double& v : w.data()) v = rng.uniform(-bound, bound);
    }
}

std::uint64_t weight_stamp(const Model& model) {
    // FNV-1a over the raw weight bytes.
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& w : model.weights) {
        const auto* p = reinterpret_cast<const unsigned char*>(w.data().data());
        for (std::size_t i = 0; i < w.size() * sizeof(double); ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    }
    return h;
}

namespace {

void apply_layer(const Model& model, std::size_t l, const SparseMatrix& a_hat, DenseMatrix& h,
                 ForwardCache& cache, const ForwardOptions& opts) {
    const auto& spec = model.layers[l];
    if (h.cols() != spec.in_dim)
        throw FatalError("forward: input dim " + std::to_string(h.cols()) +
                         " != layer in_dim " + std::to_string(spec.in_dim));
    cache.inputs.push_back(h);
    DenseMatrix p = (spec.kind == LayerKind::GraphConv) ? spmm(a_hat, h) : h;
    cache.propagated.push_back(p);
    DenseMatrix z = matmul(p, model.weights[l]);
    cache.preact.push_back(z);
    if (spec.activation == Activation::Relu) {
        DenseMatrix mask(z.rows(), z.cols());
        for (std::size_t i = 0; i < z.size(); ++i) {
            bool on = z.data()[i] > 0.0;
            mask.data()[i] = on ? 1.0 : 0.0;
            if (!on) z.data()[i] = 0.0;
        }
        cache.relu_mask.push_back(std::move(mask));
        if (opts.dropout > 0.0 && opts.dropout_rng) {
            DenseMatrix dmask(z.rows(), z.cols());
            double keep = 1.0 - opts.dropout;
            for (std::size_t i = 0; i < z.size(); ++i) {
                double m = (opts.dropout_rng->uniform() < keep) ? 1.0 / keep : 0.0;
                dmask.data()[i] = m;
                z.data()[i] *= m;
            }
            cache.dropout_mask.push_back(std::move(dmask));
        } else {
            cache.dropout_mask.emplace_back();
        }
    } else {
        cache.relu_mask.emplace_back();
        cache.dropout_mask.emplace_back();
    }
    h = std::move(z);
}

}  // namespace

DenseMatrix gcn_forward(const Model& model, const SparseMatrix& a_hat, const DenseMatrix& x,
                        ForwardCache& cache, const ForwardOptions& opts) {
    model.validate();
    if (a_hat.rows() != x.rows())
        throw FatalError("forward: adjacency is " + std::to_string(a_hat.rows()) +
                         " nodes but features have " + std::to_string(x.rows()) + " rows");
    cache = ForwardCache{};
    DenseMatrix h = x;
    for (std::size_t l = 0; l < model.layers.size(); ++l)
        apply_layer(model, l, a_hat, h, cache, opts);
    cache.output = h;
    cache.weight_stamp = weight_stamp(model);
    return h;
}

DenseMatrix sgc_forward(const Model& model, const SparseMatrix& a_hat, const DenseMatrix& x,
                        ForwardCache& cache) {
    model.validate();
    if (model.layers.size() != 1) throw FatalError("sgc_forward: expects a single layer");
    cache = ForwardCache{};
    cache.inputs.push_back(x);
    DenseMatrix p = x;
    for (std::size_t k = 0; k < model.sgc_power; ++k) p = spmm(a_hat, p);
    cache.propagated.push_back(p);
    DenseMatrix y = matmul(p, model.weights[0]);
    cache.preact.push_back(y);
    cache.relu_mask.emplace_back();
    cache.dropout_mask.emplace_back();
    cache.output = y;
    cache.weight_stamp = weight_stamp(model);
    return y;
}

DenseMatrix model_forward(const Model& model, const SparseMatrix& a_hat, const DenseMatrix& x,
                          ForwardCache& cache, const ForwardOptions& opts) {
    if (model.arch == Arch::SGC) return sgc_forward(model, a_hat, x, cache);
    return gcn_forward(model, a_hat, x, cache, opts);
}

EdgeScores score_edges(const DenseMatrix& embedding,
                       const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    EdgeScores s;
    s.edges = edges;
    s.logits.reserve(edges.size());
    s.probabilities.reserve(edges.size());
    for (auto [u, v] : edges) {
        if (u >= embedding.rows() || v >= embedding.rows())
            throw FatalError("score_edges: node id out of range");
        double dot = 0.0;
        for (std::size_t c = 0; c < embedding.cols(); ++c) dot += embedding(u, c) * embedding(v, c);
        s.logits.push_back(dot);
        s.probabilities.push_back(1.0 / (1.0 + std::exp(-dot)));
    }
    return s;
}

EdgeScores gae_forward(const Model& model, const SparseMatrix& a_hat, const DenseMatrix& x,
                       const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                       ForwardCache& cache, const ForwardOptions& opts) {
    DenseMatrix z = gcn_forward(model, a_hat, x, cache, opts);
    return score_edges(z, edges);
}

void save_checkpoint(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FatalError("cannot write checkpoint: " + path);
    out.write("JLCK", 4);
    std::uint32_t arch = static_cast<std::uint32_t>(model.arch);
    std::uint64_t nl = model.layers.size();
    std::uint64_t power = model.sgc_power;
    out.write(reinterpret_cast<const char*>(&arch), 4);
    out.write(reinterpret_cast<const char*>(&power), 8);
    out.write(reinterpret_cast<const char*>(&nl), 8);
    for (std::size_t l = 0; l < nl; ++l) {
        const auto& spec = model.layers[l];
        std::uint32_t kind = static_cast<std::uint32_t>(spec.kind);
        std::uint32_t act = static_cast<std::uint32_t>(spec.activation);
        std::uint64_t in = spec.in_dim, odim = spec.out_dim;
        out.write(reinterpret_cast<const char*>(&kind), 4);
        out.write(reinterpret_cast<const char*>(&act), 4);
        out.write(reinterpret_cast<const char*>(&in), 8);
        out.write(reinterpret_cast<const char*>(&odim), 8);
        out.write(reinterpret_cast<const char*>(model.weights[l].data().data()),
                  static_cast<std::streamsize>(model.weights[l].size() * sizeof(double)));
    }
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FatalError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "JLCK", 4) != 0)
        throw FatalError(path + ": not a checkpoint file");
    Model m;
    std::uint32_t arch = 0;
    std::uint64_t nl = 0, power = 0;
    in.read(reinterpret_cast<char*>(&arch), 4);
    in.read(reinterpret_cast<char*>(&power), 8);
    in.read(reinterpret_cast<char*>(&nl), 8);
    if (!in || arch > 2) throw FatalError(path + ": corrupt checkpoint header");
    m.arch = static_cast<Arch>(arch);
    m.sgc_power = power;
    for (std::uint64_t l = 0; l < nl; ++l) {
        std::uint32_t kind = 0, act = 0;
        std::uint64_t in_dim = 0, out_dim = 0;
        in.read(reinterpret_cast<char*>(&kind), 4);
        in.read(reinterpret_cast<char*>(&act), 4);
        in.read(reinterpret_cast<char*>(&in_dim), 8);
        in.read(reinterpret_cast<char*>(&out_dim), 8);
        if (!in || kind > 1 || act > 1) throw FatalError(path + ": corrupt layer spec");
        m.layers.push_back({static_cast<LayerKind>(kind), in_dim, out_dim,
                            static_cast<Activation>(act)});
        DenseMatrix w(in_dim, out_dim);
        in.read(reinterpret_cast<char*>(w.data().data()),
                static_cast<std::streamsize>(w.size() * sizeof(double)));
        if (!in) throw FatalError(path + ": truncated weights");
        m.weights.push_back(std::move(w));
    }
    m.validate();
    return m;
}

}  // namespace jacolip
