#pragma once

#include <optional>
#include <string>

#include "jacolip/grad.hpp"

namespace jacolip {

struct LipReport {
    DenseMatrix lb_matrix;  // N x F_out, entry (i,j) = ||row j of [J_i]||
    double global_lip = 0.0;
    double layerwise_bound = 0.0;
    std::size_t argmax_node = 0;
    std::optional<double> empirical_lower;

    std::string to_json() const;
};

DenseMatrix lb_matrix(const NodeJacobianSet& jacobians);

// (value, argmax row); value = norm_inf2(lb), ties broken by lowest index.
std::pair<double, std::size_t> global_lip(const DenseMatrix& lb);

// Layer-product bound: max over nodes j of
//   prod_l F'^l * max_c ||row c of layer l's node-j Jacobian block||.
double layerwise_bound(const Model& model, const SparseMatrix& a_hat, const ForwardCache& cache);

struct EmpiricalLipOptions {
    std::size_t n_probes = 200;
    double eps = 1e-4;
    std::uint64_t seed = 0;
    int retry_cap = 50;  // mask-flip resamples per probe before skipping
    bool require_same_region = true;
};

struct EmpiricalLipResult {
    double max_ratio = 0.0;
    std::size_t skipped = 0;  // probes abandoned after the retry cap
};

// Monte-Carlo lower bound: each probe perturbs one node's features by a
// random direction of norm eps and measures that node's output change.
// Probes that flip a ReLU mask are resampled so the ratio stays inside
// one linear region.
EmpiricalLipResult empirical_lip(const Model& model, const SparseMatrix& a_hat,
                                 const DenseMatrix& x, const EmpiricalLipOptions& opts);

struct Lemma1Result {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

// lhs = ||g(x)-g(y)|| / ||x-y||, rhs = l2-norm of the per-component
// difference quotients; holds when lhs <= rhs + 1e-12.
Lemma1Result lemma1_check(const std::function<std::vector<double>(const std::vector<double>&)>& g,
                          const std::vector<double>& x, const std::vector<double>& y);

LipReport lip_report(const Model& model, const SparseMatrix& a_hat, const ForwardCache& cache,
                     const NodeJacobianSet& jacobians);

}  // namespace jacolip
