#pragma once

#include <string>
#include <vector>

#include "jacolip/graph.hpp"

namespace jacolip {

enum class SimilarityKind { FeatureCosine, StructuralJaccard, OutcomeCosine };

struct SimilarityMatrix {
    DenseMatrix values;  // n x n, symmetric; diagonal excluded from rankings
    SimilarityKind kind = SimilarityKind::FeatureCosine;
};

struct RankMetricReport {
    std::vector<double> ndcg_per_node;
    std::vector<double> err_per_node;
    double mean_ndcg = 0.0;
    double mean_err = 0.0;
    std::size_t k = 10;
};

SimilarityMatrix cosine_similarity(const DenseMatrix& m, SimilarityKind kind);
SimilarityMatrix jaccard_similarity(const SparseMatrix& a);

// Candidate order: S_Y row descending, ties broken by lower index.
// Exponential gain (2^rel - 1) / log2(p + 1); NDCG = 1 when IDCG = 0.
RankMetricReport ndcg_at_k(const SimilarityMatrix& s_g, const SimilarityMatrix& s_y,
                           std::size_t k);
// Expected reciprocal rank with R_p = (2^rel - 1)/2^rel_max, normalized by
// the ideal ordering's value; 1 when the ideal value is 0.
RankMetricReport err_at_k(const SimilarityMatrix& s_g, const SimilarityMatrix& s_y, std::size_t k);
// Both metrics in one report.
RankMetricReport rank_metrics(const SimilarityMatrix& s_g, const SimilarityMatrix& s_y,
                              std::size_t k);

double accuracy(const DenseMatrix& logits, const std::vector<int>& labels,
                const std::vector<char>& mask);
// Mann-Whitney AUC: P(score+ > score-) + 0.5 P(equal).
double auc(const std::vector<double>& scores, const std::vector<double>& labels);

// Ranking of all j != i by row i of the similarity matrix, descending,
// ties by lower index. Exposed for the metric oracles in tests.
std::vector<std::size_t> ranked_candidates(const DenseMatrix& s, std::size_t i);

std::string metric_report_json(const RankMetricReport& rep, const std::string& utility_name,
                               double utility, const std::string& per_node_path = "");

}  // namespace jacolip
