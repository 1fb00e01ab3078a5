#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jacolip/linalg.hpp"

namespace jacolip {

// Attributed undirected graph. Raw adjacency is binary, symmetric and has
// no self-loops; loops in input files are dropped on load.
struct Graph {
    std::size_t n_nodes = 0;
    SparseMatrix adjacency;
    DenseMatrix features;
    std::vector<int> labels;  // empty when the task has none
    std::vector<char> train_mask, val_mask, test_mask;

    bool has_labels() const { return !labels.empty(); }
    std::size_t feature_dim() const { return features.cols(); }
    std::size_t n_edges() const { return adjacency.nnz() / 2; }
    std::vector<std::pair<std::size_t, std::size_t>> edge_list() const;
};

// D^{-1/2} (A + I) D^{-1/2} with D the degree after self-loop insertion.
struct NormalizedAdjacency {
    SparseMatrix matrix;
};

struct EdgeSplit {
    using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;
    EdgeList train_pos, val_pos, test_pos;
    EdgeList train_neg, val_neg, test_neg;
    // Message-passing adjacency induced by the train positives only.
    SparseMatrix train_adjacency;
};

struct SynthSpec {
    std::size_t n_nodes = 300;
    std::size_t n_blocks = 2;
    double p_intra = 0.1;
    double p_inter = 0.01;
    std::size_t feature_dim = 8;
    std::size_t n_classes = 2;
    double class_signal = 1.0;
    double bias_strength = 0.0;
    std::uint64_t seed = 0;
    std::vector<int> block_of;  // filled by synth_sbm_biased
};

Graph load_graph(const std::string& edge_path, const std::string& feature_path,
                 const std::string& label_path = "");
void load_masks(Graph& g, const std::string& train_path, const std::string& val_path,
                const std::string& test_path);
void save_graph(const Graph& g, const std::string& edge_path, const std::string& feature_path,
                const std::string& label_path = "", bool binary_features = false);
void save_masks(const Graph& g, const std::string& train_path, const std::string& val_path,
                const std::string& test_path);

NormalizedAdjacency normalize_adjacency(const Graph& g);
SparseMatrix normalize_edges(std::size_t n_nodes,
                             const std::vector<std::pair<std::size_t, std::size_t>>& edges);

// Stochastic block model with class-informative Gaussian features plus one
// appended channel equal to bias_strength * block indicator + noise. Class
// labels are drawn independently of the blocks, so that channel is spurious.
Graph synth_sbm_biased(SynthSpec& spec);

void split_nodes(Graph& g, double train_ratio, double val_ratio, double test_ratio,
                 std::uint64_t seed);
EdgeSplit split_edges(const Graph& g, double train_ratio, double val_ratio, double test_ratio,
                      std::uint64_t seed);

}  // namespace jacolip
