#pragma once

#include <string>
#include <utility>
#include <vector>

#include "jacolip/linalg.hpp"

namespace jacolip {

enum class Arch { GCN, SGC, GAE };
enum class LayerKind { GraphConv, Linear };
enum class Activation { Relu, None };

std::string arch_name(Arch a);
Arch arch_from_name(const std::string& s);

struct LayerSpec {
    LayerKind kind = LayerKind::GraphConv;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation = Activation::None;
};

struct Model {
    Arch arch = Arch::GCN;
    std::vector<LayerSpec> layers;
    std::vector<DenseMatrix> weights;  // one (in_dim x out_dim) matrix per layer
    std::size_t sgc_power = 2;         // SGC only: propagation power K

    std::size_t n_layers() const { return layers.size(); }
    std::size_t input_dim() const { return layers.front().in_dim; }
    std::size_t output_dim() const { return layers.back().out_dim; }
    double weight_norm() const;
    void validate() const;
};

// Per-layer state captured during a forward pass. Sufficient to rerun the
// backward pass and the closed-form Jacobians for the same (weights, input).
struct ForwardCache {
    std::vector<DenseMatrix> inputs;        // H^{l-1} per layer
    std::vector<DenseMatrix> propagated;    // P^l = A_hat * H^{l-1} (or H^{l-1} for linear)
    std::vector<DenseMatrix> preact;        // Z^l = P^l W^l
    std::vector<DenseMatrix> relu_mask;     // 1 where Z^l > 0 (empty for act=none)
    std::vector<DenseMatrix> dropout_mask;  // inverted-scale mask (empty when dropout off)
    DenseMatrix output;
    std::uint64_t weight_stamp = 0;  // fingerprint of the weights the cache belongs to

    bool masks_equal(const ForwardCache& o) const;
};

struct EdgeScores {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<double> logits;
    std::vector<double> probabilities;
};

// Shape helpers for the stock configurations.
Model make_gcn(std::size_t in_dim, std::size_t hidden, std::size_t out_dim);
Model make_gcn_dims(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                    std::size_t out_dim);
Model make_sgc(std::size_t in_dim, std::size_t out_dim, std::size_t power = 2);
Model make_gae(std::size_t in_dim, std::size_t hidden = 32, std::size_t embed = 16);

// Glorot-uniform initialization, deterministic per seed.
void init_params(Model& model, std::uint64_t seed);
std::uint64_t weight_stamp(const Model& model);

struct ForwardOptions {
    double dropout = 0.0;  // train-time Bernoulli drop on hidden activations
    Rng* dropout_rng = nullptr;
};

// Stacked graph-conv forward (GCN and the GAE encoder share this path).
DenseMatrix gcn_forward(const Model& model, const SparseMatrix& a_hat, const DenseMatrix& x,
                        ForwardCache& cache, const ForwardOptions& opts = {});
DenseMatrix sgc_forward(const Model& model, const SparseMatrix& a_hat, const DenseMatrix& x,
                        ForwardCache& cache);
// Dispatches on model.arch; GAE returns the encoder embedding.
DenseMatrix model_forward(const Model& model, const SparseMatrix& a_hat, const DenseMatrix& x,
                          ForwardCache& cache, const ForwardOptions& opts = {});

EdgeScores gae_forward(const Model& model, const SparseMatrix& a_hat, const DenseMatrix& x,
                       const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                       ForwardCache& cache, const ForwardOptions& opts = {});
EdgeScores score_edges(const DenseMatrix& embedding,
                       const std::vector<std::pair<std::size_t, std::size_t>>& edges);

// Checkpoint file: magic "JLCK", arch tag, layer specs, LE f64 weights.
// Round-trips bit-exactly.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace jacolip
