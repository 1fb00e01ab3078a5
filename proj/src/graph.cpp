#include "jacolip/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace jacolip {

namespace {

constexpr char kFeatureMagic[4] = {'J', 'L', 'F', 'M'};

std::vector<std::pair<std::size_t, std::size_t>> read_edge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open edge file: " + path);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        long long u, v;
        if (!(ls >> u >> v) || u < 0 || v < 0)
            throw FatalError(path + ":" + std::to_string(lineno) + ": malformed edge line");
        edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    }
    return edges;
}

DenseMatrix read_feature_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FatalError("cannot open feature file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() == 4 && std::memcmp(magic, kFeatureMagic, 4) == 0) {
        std::uint64_t n = 0, f = 0;
        in.read(reinterpret_cast<char*>(&n), 8);
        in.read(reinterpret_cast<char*>(&f), 8);
        if (!in) throw FatalError(path + ": truncated binary feature header");
        DenseMatrix m(n, f);
        in.read(reinterpret_cast<char*>(m.data().data()),
                static_cast<std::streamsize>(n * f * sizeof(double)));
        if (!in) throw FatalError(path + ": truncated binary feature payload");
        return m;
    }
    in.close();
    std::ifstream txt(path);
    std::size_t n, f;
    if (!(txt >> n >> f)) throw FatalError(path + ": missing 'N F' header");
    DenseMatrix m(n, f);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < f; ++j)
            if (!(txt >> m(i, j)))
                throw FatalError(path + ": truncated at feature row " + std::to_string(i));
    check_finite(m, "features " + path);
    return m;
}

std::vector<char> read_mask_file(const std::string& path, std::size_t n) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open mask file: " + path);
    std::vector<char> mask(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        int v;
        if (!(in >> v) || (v != 0 && v != 1))
            throw FatalError(path + ": bad mask entry at row " + std::to_string(i));
        mask[i] = static_cast<char>(v);
    }
    return mask;
}

SparseMatrix adjacency_from_edges(std::size_t n,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    std::set<std::pair<std::size_t, std::size_t>> uniq;
    for (auto [u, v] : edges) {
        if (u == v) continue;  // self-loops dropped
        uniq.emplace(std::min(u, v), std::max(u, v));
    }
    std::vector<std::tuple<std::size_t, std::size_t, double>> trip;
    trip.reserve(uniq.size() * 2);
    for (auto [u, v] : uniq) {
        trip.emplace_back(u, v, 1.0);
        trip.emplace_back(v, u, 1.0);
    }
    return SparseMatrix::from_triplets(n, n, std::move(trip));
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> Graph::edge_list() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const auto& off = adjacency.offsets();
    const auto& ci = adjacency.col_indices();
    for (std::size_t r = 0; r < n_nodes; ++r)
        for (std::size_t k = off[r]; k < off[r + 1]; ++k)
            if (ci[k] > r) out.emplace_back(r, ci[k]);
    return out;
}

Graph load_graph(const std::string& edge_path, const std::string& feature_path,
                 const std::string& label_path) {
    Graph g;
    g.features = read_feature_file(feature_path);
    g.n_nodes = g.features.rows();
    auto edges = read_edge_file(edge_path);
    std::size_t lineno = 0;
    for (auto [u, v] : edges) {
        ++lineno;
        if (u >= g.n_nodes || v >= g.n_nodes)
            throw FatalError(edge_path + ": node index out of range at edge " +
                             std::to_string(lineno));
    }
    g.adjacency = adjacency_from_edges(g.n_nodes, edges);
    if (!label_path.empty()) {
        std::ifstream in(label_path);
        if (!in) throw FatalError("cannot open label file: " + label_path);
        g.labels.resize(g.n_nodes);
        for (std::size_t i = 0; i < g.n_nodes; ++i)
            if (!(in >> g.labels[i]))
                throw FatalError(label_path + ": label row count mismatch (expected " +
                                 std::to_string(g.n_nodes) + ")");
    }
    return g;
}

void load_masks(Graph& g, const std::string& train_path, const std::string& val_path,
                const std::string& test_path) {
    g.train_mask = read_mask_file(train_path, g.n_nodes);
    g.val_mask = read_mask_file(val_path, g.n_nodes);
    g.test_mask = read_mask_file(test_path, g.n_nodes);
}

void save_graph(const Graph& g, const std::string& edge_path, const std::string& feature_path,
                const std::string& label_path, bool binary_features) {
    {
        std::ofstream out(edge_path);
        if (!out) throw FatalError("cannot write edge file: " + edge_path);
        out << "# undirected edges u v\n";
        for (auto [u, v] : g.edge_list()) out << u << "\t" << v << "\n";
    }
    if (binary_features) {
        std::ofstream out(feature_path, std::ios::binary);
        if (!out) throw FatalError("cannot write feature file: " + feature_path);
        out.write(kFeatureMagic, 4);
        std::uint64_t n = g.features.rows(), f = g.features.cols();
        out.write(reinterpret_cast<const char*>(&n), 8);
        out.write(reinterpret_cast<const char*>(&f), 8);
        out.write(reinterpret_cast<const char*>(g.features.data().data()),
                  static_cast<std::streamsize>(n * f * sizeof(double)));
    } else {
        std::ofstream out(feature_path);
        if (!out) throw FatalError("cannot write feature file: " + feature_path);
        out << g.features.rows() << " " << g.features.cols() << "\n";
        out.precision(17);
        for (std::size_t i = 0; i < g.features.rows(); ++i) {
            for (std::size_t j = 0; j < g.features.cols(); ++j)
                out << (j ? " " : "") << g.features(i, j);
            out << "\n";
        }
    }
    if (!label_path.empty()) {
        std::ofstream out(label_path);
        if (!out) throw FatalError("cannot write label file: " + label_path);
        for (int l : g.labels) out << l << "\n";
    }
}

void save_masks(const Graph& g, const std::string& train_path, const std::string& val_path,
                const std::string& test_path) {
    auto write = [&](const std::string& p, const std::vector<char>& m) {
        std::ofstream out(p);
        if (!out) throw FatalError("cannot write mask file: " + p);
        for (char v : m) out << int(v) << "\n";
    };
    write(train_path, g.train_mask);
    write(val_path, g.val_mask);
    write(test_path, g.test_mask);
}

SparseMatrix normalize_edges(std::size_t n_nodes,
                             const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    std::vector<double> degree(n_nodes, 1.0);  // self-loop contributes 1
    for (auto [u, v] : edges) {
        degree[u] += 1.0;
        degree[v] += 1.0;
    }
    std::vector<std::tuple<std::size_t, std::size_t, double>> trip;
    trip.reserve(edges.size() * 2 + n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) trip.emplace_back(i, i, 1.0 / degree[i]);
    for (auto [u, v] : edges) {
        double w = 1.0 / std::sqrt(degree[u] * degree[v]);
        trip.emplace_back(u, v, w);
        trip.emplace_back(v, u, w);
    }
    return SparseMatrix::from_triplets(n_nodes, n_nodes, std::move(trip));
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
    return NormalizedAdjacency{normalize_edges(g.n_nodes, g.edge_list())};
}

Graph synth_sbm_biased(SynthSpec& spec) {
    if (spec.n_blocks < 2) throw FatalError("synth: n_blocks must be >= 2");
    if (spec.p_intra < 0 || spec.p_intra > 1 || spec.p_inter < 0 || spec.p_inter > 1)
        throw FatalError("synth: edge probabilities must lie in [0,1]");
    if (spec.bias_strength < 0) throw FatalError("synth: bias_strength must be >= 0");

    std::size_t n = spec.n_nodes;
    Rng block_rng = Rng(spec.seed).split(1);
    Rng label_rng = Rng(spec.seed).split(2);
    Rng edge_rng = Rng(spec.seed).split(3);
    Rng feat_rng = Rng(spec.seed).split(4);

    Graph g;
    g.n_nodes = n;
    spec.block_of.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        spec.block_of[i] = static_cast<int>(block_rng.uniform_index(spec.n_blocks));
    g.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        g.labels[i] = static_cast<int>(label_rng.uniform_index(spec.n_classes));

    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v) {
            double p = (spec.block_of[u] == spec.block_of[v]) ? spec.p_intra : spec.p_inter;
            if (edge_rng.uniform() < p) edges.emplace_back(u, v);
        }
    g.adjacency = adjacency_from_edges(n, edges);

    // Class-informative channels plus one appended bias channel keyed to
    // the block (spurious: labels are independent of blocks).
    std::size_t f = spec.feature_dim;
    g.features = DenseMatrix(n, f + 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < f; ++j) {
            double mean = (j % spec.n_classes == static_cast<std::size_t>(g.labels[i]))
                              ? spec.class_signal
                              : 0.0;
            g.features(i, j) = mean + feat_rng.normal();
        }
        double block_ind = (spec.block_of[i] == 0) ? 1.0 : -1.0;
        g.features(i, f) = spec.bias_strength * block_ind + 0.1 * feat_rng.normal();
    }
    return g;
}

void split_nodes(Graph& g, double train_ratio, double val_ratio, double test_ratio,
                 std::uint64_t seed) {
    if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
        throw FatalError("split_nodes: ratios must sum to 1");
    std::vector<std::size_t> labeled;
    for (std::size_t i = 0; i < g.n_nodes; ++i)
        if (!g.has_labels() || g.labels[i] >= 0) labeled.push_back(i);
    Rng rng = Rng(seed).split(11);
    for (std::size_t i = labeled.size(); i > 1; --i)
        std::swap(labeled[i - 1], labeled[rng.uniform_index(i)]);
    std::size_t n = labeled.size();
    auto n_train = static_cast<std::size_t>(std::llround(train_ratio * double(n)));
    auto n_val = static_cast<std::size_t>(std::llround(val_ratio * double(n)));
    if (n_train + n_val > n) n_val = n - n_train;
    g.train_mask.assign(g.n_nodes, 0);
    g.val_mask.assign(g.n_nodes, 0);
    g.test_mask.assign(g.n_nodes, 0);
    for (std::size_t k = 0; k < n; ++k) {
        if (k < n_train)
            g.train_mask[labeled[k]] = 1;
        else if (k < n_train + n_val)
            g.val_mask[labeled[k]] = 1;
        else
            g.test_mask[labeled[k]] = 1;
    }
}

EdgeSplit split_edges(const Graph& g, double train_ratio, double val_ratio, double test_ratio,
                      std::uint64_t seed) {
    if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
        throw FatalError("split_edges: ratios must sum to 1");
    auto edges = g.edge_list();
    std::size_t m = edges.size();
    Rng rng = Rng(seed).split(12);
    for (std::size_t i = m; i > 1; --i) std::swap(edges[i - 1], edges[rng.uniform_index(i)]);
    auto n_train = static_cast<std::size_t>(std::llround(train_ratio * double(m)));
    auto n_val = static_cast<std::size_t>(std::llround(val_ratio * double(m)));
    if (n_train + n_val > m) n_val = m - n_train;

    EdgeSplit split;
    split.train_pos.assign(edges.begin(), edges.begin() + n_train);
    split.val_pos.assign(edges.begin() + n_train, edges.begin() + n_train + n_val);
    split.test_pos.assign(edges.begin() + n_train + n_val, edges.end());

    std::set<std::pair<std::size_t, std::size_t>> present(edges.begin(), edges.end());
    std::size_t n = g.n_nodes;
    std::size_t max_pairs = n * (n - 1) / 2;
    if (max_pairs - m < m)
        throw FatalError("split_edges: not enough absent pairs for negative sampling");
    std::set<std::pair<std::size_t, std::size_t>> taken;
    auto sample_negatives = [&](std::size_t count) {
        EdgeSplit::EdgeList out;
        while (out.size() < count) {
            std::size_t u = rng.uniform_index(n);
            std::size_t v = rng.uniform_index(n);
            if (u == v) continue;
            auto e = std::minmax(u, v);
            std::pair<std::size_t, std::size_t> key{e.first, e.second};
            if (present.count(key) || taken.count(key)) continue;
            taken.insert(key);
            out.push_back(key);
        }
        return out;
    };
    split.train_neg = sample_negatives(split.train_pos.size());
    split.val_neg = sample_negatives(split.val_pos.size());
    split.test_neg = sample_negatives(split.test_pos.size());
    split.train_adjacency = normalize_edges(n, split.train_pos);
    return split;
}

}  // namespace jacolip
