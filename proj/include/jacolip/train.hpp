#pragma once

#include <functional>
#include <string>

#include "jacolip/lipschitz.hpp"
#include "jacolip/metrics.hpp"

namespace jacolip {

enum class Task { NodeClassification, LinkPrediction };

struct TrainConfig {
    Arch arch = Arch::GCN;
    Task task = Task::NodeClassification;
    std::size_t epochs = 100;          // regularized phase length
    std::size_t pretrain_epochs = 0;   // task-loss-only phase before it
    double learning_rate = 0.01;
    double weight_decay = 1e-5;
    double u = 0.0;  // regularizer weight
    std::size_t k = 10;
    double dropout = 0.0;
    std::uint64_t seed = 0;
    SimilarityKind sim_kind = SimilarityKind::FeatureCosine;

    std::size_t hidden = 16;
    std::size_t embed_dim = 16;
    std::size_t link_hidden = 32;  // encoder widths for link prediction
    std::size_t sgc_power = 2;

    double edge_train_ratio = 0.85, edge_val_ratio = 0.05, edge_test_ratio = 0.10;
    double node_train_ratio = 0.6, node_val_ratio = 0.2, node_test_ratio = 0.2;

    std::size_t total_epochs() const { return pretrain_epochs + epochs; }
    void validate() const;
};

struct OptimizerState {
    std::vector<DenseMatrix> m, v;
    std::size_t step = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

OptimizerState make_optimizer_state(const Model& model);
// Decoupled weight decay AdamW with bias-corrected moments.
void adamw_step(Model& model, const ParamGrads& grads, OptimizerState& state,
                double learning_rate, double weight_decay);

struct EpochRecord {
    std::size_t epoch = 0;
    double loss = 0.0;
    double reg = 0.0;  // global_lip at the epoch's start
    double utility = 0.0;
    double ndcg = 0.0;
    double weight_norm = 0.0;
    double grad_norm = 0.0;
};

struct DynamicsLog {
    std::vector<EpochRecord> records;
    void write_csv(const std::string& path) const;
    static DynamicsLog read_csv(const std::string& path);
};

struct TrainResult {
    Model model;
    DynamicsLog log;
    double final_global_lip = 0.0;
    double final_utility = 0.0;
    double final_ndcg = 0.0;
    double final_err = 0.0;
    bool diverged = false;
    bool degenerate_reg = false;  // hit the all-zero-Jacobian branch
};

// Observer sees the model and gradients at each epoch's start, before the
// optimizer update; used by the dynamics verification tooling.
using EpochObserver =
    std::function<void(std::size_t, const Model&, const ParamGrads&, const EpochRecord&)>;

TrainResult train_vanilla(const Graph& graph, const TrainConfig& config,
                          const EpochObserver& observer = nullptr);
TrainResult train_jacolip(const Graph& graph, const TrainConfig& config,
                          const EpochObserver& observer = nullptr);

// Builds the configured model shape for a graph (uninitialized weights).
Model build_model(const Graph& graph, const TrainConfig& config);

}  // namespace jacolip
