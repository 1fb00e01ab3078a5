#include "jacolip/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace jacolip {

SimilarityMatrix cosine_similarity(const DenseMatrix& m, SimilarityKind kind) {
    std::size_t n = m.rows();
    auto norms = row_l2_norms(m);
    SimilarityMatrix s;
    s.kind = kind;
    s.values = DenseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        s.values(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = 0.0;
            if (norms[i] > 0.0 && norms[j] > 0.0) {
                double dot = 0.0;
                for (std::size_t c = 0; c < m.cols(); ++c) dot += m(i, c) * m(j, c);
                v = dot / (norms[i] * norms[j]);
            }
            s.values(i, j) = v;
            s.values(j, i) = v;
        }
    }
    return s;
}

SimilarityMatrix jaccard_similarity(const SparseMatrix& a) {
    std::size_t n = a.rows();
    const auto& off = a.offsets();
    const auto& ci = a.col_indices();
    SimilarityMatrix s;
    s.kind = SimilarityKind::StructuralJaccard;
    s.values = DenseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        s.values(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            // Column indices are sorted within each row.
            std::size_t pi = off[i], pj = off[j];
            std::size_t inter = 0, uni = 0;
            while (pi < off[i + 1] && pj < off[j + 1]) {
                if (ci[pi] == ci[pj]) {
                    ++inter;
                    ++pi;
                    ++pj;
                } else if (ci[pi] < ci[pj]) {
                    ++pi;
                } else {
                    ++pj;
                }
                ++uni;
            }
            uni += (off[i + 1] - pi) + (off[j + 1] - pj);
            double v = (uni == 0) ? 0.0 : double(inter) / double(uni);
            s.values(i, j) = v;
            s.values(j, i) = v;
        }
    }
    return s;
}

std::vector<std::size_t> ranked_candidates(const DenseMatrix& s, std::size_t i) {
    std::vector<std::size_t> order;
    order.reserve(s.rows() - 1);
    for (std::size_t j = 0; j < s.rows(); ++j)
        if (j != i) order.push_back(j);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s(i, a) > s(i, b); });
    return order;
}

namespace {

double dcg_at_k(const DenseMatrix& rel, std::size_t i, const std::vector<std::size_t>& order,
                std::size_t k) {
    double dcg = 0.0;
    for (std::size_t p = 0; p < k; ++p)
        dcg += (std::exp2(rel(i, order[p])) - 1.0) / std::log2(double(p) + 2.0);
    return dcg;
}

double err_value(const DenseMatrix& rel, std::size_t i, const std::vector<std::size_t>& order,
                 std::size_t k, double rel_max) {
    if (rel_max <= 0.0) return 0.0;
    double denom = std::exp2(rel_max);
    double err = 0.0, not_stopped = 1.0;
    for (std::size_t p = 0; p < k; ++p) {
        double r = (std::exp2(rel(i, order[p])) - 1.0) / denom;
        err += not_stopped * r / double(p + 1);
        not_stopped *= (1.0 - r);
    }
    return err;
}

void check_rank_inputs(const SimilarityMatrix& s_g, const SimilarityMatrix& s_y, std::size_t k) {
    if (!s_g.values.same_shape(s_y.values))
        throw FatalError("rank metrics: similarity shapes differ");
    if (k < 1 || k >= s_g.values.rows())
        throw FatalError("rank metrics: need 1 <= k < n, got k=" + std::to_string(k) +
                         " n=" + std::to_string(s_g.values.rows()));
}

}  // namespace

RankMetricReport ndcg_at_k(const SimilarityMatrix& s_g, const SimilarityMatrix& s_y,
                           std::size_t k) {
    check_rank_inputs(s_g, s_y, k);
    std::size_t n = s_g.values.rows();
    RankMetricReport rep;
    rep.k = k;
    rep.ndcg_per_node.resize(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto pred = ranked_candidates(s_y.values, i);
        auto ideal = ranked_candidates(s_g.values, i);
        double idcg = dcg_at_k(s_g.values, i, ideal, k);
        double v = (idcg == 0.0) ? 1.0 : dcg_at_k(s_g.values, i, pred, k) / idcg;
        rep.ndcg_per_node[i] = v;
        total += v;
    }
    rep.mean_ndcg = total / double(n);
    return rep;
}

RankMetricReport err_at_k(const SimilarityMatrix& s_g, const SimilarityMatrix& s_y,
                          std::size_t k) {
    check_rank_inputs(s_g, s_y, k);
    std::size_t n = s_g.values.rows();
    RankMetricReport rep;
    rep.k = k;
    rep.err_per_node.resize(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double rel_max = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) rel_max = std::max(rel_max, s_g.values(i, j));
        auto pred = ranked_candidates(s_y.values, i);
        auto ideal = ranked_candidates(s_g.values, i);
        double ideal_err = err_value(s_g.values, i, ideal, k, rel_max);
        double v = (ideal_err == 0.0)
                       ? 1.0
                       : err_value(s_g.values, i, pred, k, rel_max) / ideal_err;
        rep.err_per_node[i] = v;
        total += v;
    }
    rep.mean_err = total / double(n);
    return rep;
}

RankMetricReport rank_metrics(const SimilarityMatrix& s_g, const SimilarityMatrix& s_y,
                              std::size_t k) {
    RankMetricReport rep = ndcg_at_k(s_g, s_y, k);
    RankMetricReport err = err_at_k(s_g, s_y, k);
    rep.err_per_node = std::move(err.err_per_node);
    rep.mean_err = err.mean_err;
    return rep;
}

double accuracy(const DenseMatrix& logits, const std::vector<int>& labels,
                const std::vector<char>& mask) {
    if (labels.size() != logits.rows() || mask.size() != logits.rows())
        throw FatalError("accuracy: label/mask length mismatch");
    std::size_t count = 0, correct = 0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        if (!mask[i]) continue;
        ++count;
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols(); ++c)
            if (logits(i, c) > logits(i, best)) best = c;
        if (static_cast<int>(best) == labels[i]) ++correct;
    }
    if (count == 0) throw FatalError("accuracy: empty mask");
    return double(correct) / double(count);
}

double auc(const std::vector<double>& scores, const std::vector<double>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw FatalError("auc: empty or mismatched input");
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::size_t n_pos = 0, n_neg = 0;
    for (double y : labels) (y > 0.5 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) throw FatalError("auc: both classes must be present");

    // Rank-sum with midranks for ties.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = (double(i) + double(j - 1)) / 2.0 + 1.0;
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]] > 0.5) rank_sum_pos += midrank;
        i = j;
    }
    return (rank_sum_pos - double(n_pos) * (double(n_pos) + 1.0) / 2.0) /
           (double(n_pos) * double(n_neg));
}

std::string metric_report_json(const RankMetricReport& rep, const std::string& utility_name,
                               double utility, const std::string& per_node_path) {
    std::ostringstream out;
    out.precision(17);
    out << "{\"ndcg@k\": " << rep.mean_ndcg << ", \"err@k\": " << rep.mean_err << ", \""
        << utility_name << "\": " << utility << ", \"k\": " << rep.k;
    if (!per_node_path.empty()) out << ", \"per_node_path\": \"" << per_node_path << "\"";
    out << "}";
    return out.str();
}

}  // namespace jacolip
