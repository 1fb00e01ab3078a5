#pragma once

#include <functional>
#include <vector>

#include "jacolip/model.hpp"

namespace jacolip {

using ParamGrads = std::vector<DenseMatrix>;

// One F_out x F_in block per node: [J_i](j,f) = dY_ij / dX_if, valid for
// the (weights, input) pair of the cache it was computed from.
struct NodeJacobianSet {
    std::vector<DenseMatrix> blocks;
    std::vector<DenseMatrix> mask_snapshot;  // ReLU masks fixing the linear region
    std::uint64_t weight_stamp = 0;
};

ParamGrads zero_grads(const Model& model);
double grads_norm(const ParamGrads& grads);
void accumulate(ParamGrads& into, const ParamGrads& from, double scale);

// Mean over masked nodes of -log softmax(Y_i)[label_i] (max-subtraction
// stabilized). Gradient w.r.t. the logits written to d_logits if non-null.
double ce_loss(const DenseMatrix& logits, const std::vector<int>& labels,
               const std::vector<char>& mask, DenseMatrix* d_logits = nullptr);

// Mean binary cross-entropy on logits; gradient per logit if requested.
double bce_edge_loss(const EdgeScores& scores, const std::vector<double>& labels,
                     std::vector<double>* d_logits = nullptr);

// dL/dZ of the inner-product decoder given per-edge logit gradients.
DenseMatrix edge_logit_backward(const DenseMatrix& embedding, const EdgeScores& scores,
                                const std::vector<double>& d_logits);

// Exact reverse-mode gradients of a scalar loss w.r.t. every W^l given
// dL/dY. Dropout masks in the cache are treated as constants.
ParamGrads backward_params(const Model& model, const SparseMatrix& a_hat,
                           const ForwardCache& cache, const DenseMatrix& d_output);

// Closed-form per-node input-output Jacobian blocks. Defined for SGC and
// for two-layer graph-conv stacks (GCN, GAE encoder); anything else is fatal.
NodeJacobianSet node_jacobians(const Model& model, const SparseMatrix& a_hat,
                               const ForwardCache& cache);

// Diagonal entries of A_hat^K, one per node.
std::vector<double> propagation_diag(const SparseMatrix& a_hat, std::size_t power);

struct RegGradient {
    ParamGrads grads;
    bool degenerate = false;  // all-zero Jacobian at the argmax node
};

// Gradient of ||J_{i*}||_F w.r.t. the weights with the ReLU masks and the
// argmax selection held constant.
RegGradient reg_gradient(const Model& model, const SparseMatrix& a_hat, const ForwardCache& cache,
                         const NodeJacobianSet& jacobians, std::size_t argmax_node);

// Central-difference check: max over entries of
// |analytic - fd| / max(|analytic|, 1e-8).
double fd_check(const std::function<double(const DenseMatrix&)>& f, const DenseMatrix& analytic,
                DenseMatrix point, double eps);

}  // namespace jacolip
