#include "jacolip/train.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace jacolip {

void TrainConfig::validate() const {
    if (learning_rate <= 0) throw FatalError("config: learning_rate must be positive");
    if (u < 0) throw FatalError("config: u must be non-negative");
    if (k < 1) throw FatalError("config: k must be >= 1");
    if (dropout < 0 || dropout >= 1) throw FatalError("config: dropout must be in [0,1)");
}

OptimizerState make_optimizer_state(const Model& model) {
    OptimizerState s;
    for (const auto& w : model.weights) {
        s.m.emplace_back(w.rows(), w.cols());
        s.v.emplace_back(w.rows(), w.cols());
    }
    return s;
}

void adamw_step(Model& model, const ParamGrads& grads, OptimizerState& state,
                double learning_rate, double weight_decay) {
    if (grads.size() != model.weights.size()) throw FatalError("adamw_step: grad count mismatch");
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
    for (std::size_t l = 0; l < grads.size(); ++l) {
        auto& w = model.weights[l];
        const auto& g = grads[l];
        if (!g.same_shape(w)) throw FatalError("adamw_step: grad shape mismatch at layer " +
                                               std::to_string(l));
        for (std::size_t i = 0; i < w.size(); ++i) {
            double gi = g.data()[i];
            if (!std::isfinite(gi))
                throw FatalError("adamw_step: non-finite gradient at layer " + std::to_string(l));
            double& m = state.m[l].data()[i];
            double& v = state.v[l].data()[i];
            m = state.beta1 * m + (1.0 - state.beta1) * gi;
            v = state.beta2 * v + (1.0 - state.beta2) * gi * gi;
            double mhat = m / bc1;
            double vhat = v / bc2;
            double& wi = w.data()[i];
            wi -= learning_rate * (mhat / (std::sqrt(vhat) + state.eps) + weight_decay * wi);
        }
    }
}

void DynamicsLog::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw FatalError("cannot write dynamics CSV: " + path);
    out.precision(17);
    out << "epoch,loss,reg,utility,ndcg,weight_norm,grad_norm\n";
    for (const auto& r : records)
        out << r.epoch << "," << r.loss << "," << r.reg << "," << r.utility << "," << r.ndcg
            << "," << r.weight_norm << "," << r.grad_norm << "\n";
}

DynamicsLog DynamicsLog::read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open dynamics CSV: " + path);
    DynamicsLog log;
    std::string line;
    if (!std::getline(in, line) || line != "epoch,loss,reg,utility,ndcg,weight_norm,grad_norm")
        throw FatalError(path + ":1: bad or missing CSV header");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        EpochRecord r;
        char c;
        if (!(ls >> r.epoch >> c >> r.loss >> c >> r.reg >> c >> r.utility >> c >> r.ndcg >> c >>
              r.weight_norm >> c >> r.grad_norm))
            throw FatalError(path + ":" + std::to_string(lineno) + ": malformed CSV row");
        log.records.push_back(r);
    }
    return log;
}

Model build_model(const Graph& graph, const TrainConfig& config) {
    std::size_t f_in = graph.feature_dim();
    if (config.task == Task::LinkPrediction) {
        if (config.arch == Arch::SGC)
            throw FatalError("link prediction supports gcn and gae backbones only");
        Model m = make_gae(f_in, config.link_hidden, config.embed_dim);
        m.arch = config.arch;  // GCN and GAE share the encoder+decoder shape here
        return m;
    }
    std::size_t n_classes = 0;
    for (int l : graph.labels) n_classes = std::max(n_classes, std::size_t(l) + 1);
    if (n_classes == 0) throw FatalError("node classification requires labels");
    if (config.arch == Arch::SGC) return make_sgc(f_in, n_classes, config.sgc_power);
    if (config.arch == Arch::GCN) return make_gcn(f_in, config.hidden, n_classes);
    throw FatalError("gae backbone is for link prediction");
}

namespace {

struct TaskContext {
    SparseMatrix a_hat;
    SimilarityMatrix s_g;
    // link prediction
    EdgeSplit split;
    std::vector<std::pair<std::size_t, std::size_t>> train_edges, test_edges;
    std::vector<double> train_labels, test_labels;
    // node classification
    std::vector<char> eval_mask;
};

TaskContext make_context(const Graph& graph_in, const TrainConfig& config, Graph& graph) {
    graph = graph_in;
    TaskContext ctx;
    if (config.sim_kind == SimilarityKind::StructuralJaccard)
        ctx.s_g = jaccard_similarity(graph.adjacency);
    else
        ctx.s_g = cosine_similarity(graph.features, SimilarityKind::FeatureCosine);

    if (config.task == Task::LinkPrediction) {
        ctx.split = split_edges(graph, config.edge_train_ratio, config.edge_val_ratio,
                                config.edge_test_ratio, config.seed);
        ctx.a_hat = ctx.split.train_adjacency;
        for (auto e : ctx.split.train_pos) {
            ctx.train_edges.push_back(e);
            ctx.train_labels.push_back(1.0);
        }
        for (auto e : ctx.split.train_neg) {
            ctx.train_edges.push_back(e);
            ctx.train_labels.push_back(0.0);
        }
        for (auto e : ctx.split.test_pos) {
            ctx.test_edges.push_back(e);
            ctx.test_labels.push_back(1.0);
        }
        for (auto e : ctx.split.test_neg) {
            ctx.test_edges.push_back(e);
            ctx.test_labels.push_back(0.0);
        }
    } else {
        if (graph.train_mask.empty())
            split_nodes(graph, config.node_train_ratio, config.node_val_ratio,
                        config.node_test_ratio, config.seed);
        ctx.a_hat = normalize_adjacency(graph).matrix;
        bool has_test = false;
        for (char m : graph.test_mask) has_test |= (m != 0);
        ctx.eval_mask = has_test ? graph.test_mask : graph.train_mask;
    }
    return ctx;
}

struct EpochEval {
    double task_loss = 0.0;
    ParamGrads task_grads;
    double utility = 0.0;
    double ndcg = 0.0;
};

EpochEval evaluate_epoch(const Model& model, const Graph& graph, const TaskContext& ctx,
                         const TrainConfig& config, const ForwardCache& eval_cache,
                         const DenseMatrix& eval_out, Rng& dropout_rng, bool want_metrics) {
    EpochEval ev;
    bool needs_dropout_pass = config.dropout > 0.0;
    if (config.task == Task::NodeClassification) {
        ForwardCache train_cache;
        const ForwardCache* cache = &eval_cache;
        const DenseMatrix* out = &eval_out;
        DenseMatrix train_out;
        if (needs_dropout_pass) {
            ForwardOptions opts;
            opts.dropout = config.dropout;
            opts.dropout_rng = &dropout_rng;
            train_out = model_forward(model, ctx.a_hat, graph.features, train_cache, opts);
            cache = &train_cache;
            out = &train_out;
        }
        DenseMatrix d_out;
        ev.task_loss = ce_loss(*out, graph.labels, graph.train_mask, &d_out);
        ev.task_grads = backward_params(model, ctx.a_hat, *cache, d_out);
        if (want_metrics) {
            ev.utility = accuracy(eval_out, graph.labels, ctx.eval_mask);
            auto s_y = cosine_similarity(eval_out, SimilarityKind::OutcomeCosine);
            ev.ndcg = ndcg_at_k(ctx.s_g, s_y, config.k).mean_ndcg;
        }
    } else {
        ForwardCache train_cache;
        const ForwardCache* cache = &eval_cache;
        DenseMatrix z_train;
        const DenseMatrix* z = &eval_out;
        if (needs_dropout_pass) {
            ForwardOptions opts;
            opts.dropout = config.dropout;
            opts.dropout_rng = &dropout_rng;
            z_train = gcn_forward(model, ctx.a_hat, graph.features, train_cache, opts);
            cache = &train_cache;
            z = &z_train;
        }
        EdgeScores scores = score_edges(*z, ctx.train_edges);
        std::vector<double> d_logits;
        ev.task_loss = bce_edge_loss(scores, ctx.train_labels, &d_logits);
        DenseMatrix dz = edge_logit_backward(*z, scores, d_logits);
        ev.task_grads = backward_params(model, ctx.a_hat, *cache, dz);
        if (want_metrics) {
            EdgeScores test_scores = score_edges(eval_out, ctx.test_edges);
            ev.utility = auc(test_scores.logits, ctx.test_labels);
            auto s_y = cosine_similarity(eval_out, SimilarityKind::OutcomeCosine);
            ev.ndcg = ndcg_at_k(ctx.s_g, s_y, config.k).mean_ndcg;
        }
    }
    return ev;
}

TrainResult run_training(const Graph& graph_in, const TrainConfig& config, bool use_reg,
                         const EpochObserver& observer) {
    config.validate();
    Graph graph;
    TaskContext ctx = make_context(graph_in, config, graph);

    TrainResult result;
    result.model = build_model(graph, config);
    init_params(result.model, config.seed);
    OptimizerState opt = make_optimizer_state(result.model);

    for (std::size_t epoch = 0; epoch < config.total_epochs(); ++epoch) {
        ForwardCache eval_cache;
        DenseMatrix eval_out = model_forward(result.model, ctx.a_hat, graph.features, eval_cache);

        NodeJacobianSet jac = node_jacobians(result.model, ctx.a_hat, eval_cache);
        DenseMatrix lb = lb_matrix(jac);
        auto [glip, argmax_node] = global_lip(lb);

        Rng dropout_rng = Rng(config.seed).split(100 + epoch);
        EpochEval ev = evaluate_epoch(result.model, graph, ctx, config, eval_cache, eval_out,
                                      dropout_rng, /*want_metrics=*/true);

        bool reg_active = use_reg && config.u > 0.0 && epoch >= config.pretrain_epochs;
        ParamGrads grads = ev.task_grads;
        double total_loss = ev.task_loss;
        if (reg_active) {
            RegGradient rg = reg_gradient(result.model, ctx.a_hat, eval_cache, jac, argmax_node);
            if (rg.degenerate) result.degenerate_reg = true;
            accumulate(grads, rg.grads, config.u);
            total_loss += config.u * glip;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = total_loss;
        rec.reg = glip;
        rec.utility = ev.utility;
        rec.ndcg = ev.ndcg;
        rec.weight_norm = result.model.weight_norm();
        rec.grad_norm = grads_norm(grads);

        if (!std::isfinite(total_loss)) {
            result.diverged = true;  // keep the last good weights
            break;
        }
        result.log.records.push_back(rec);
        if (observer) observer(epoch, result.model, grads, rec);
        adamw_step(result.model, grads, opt, config.learning_rate, config.weight_decay);
    }

    // Final state summary on the trained weights.
    ForwardCache final_cache;
    DenseMatrix final_out = model_forward(result.model, ctx.a_hat, graph.features, final_cache);
    NodeJacobianSet jac = node_jacobians(result.model, ctx.a_hat, final_cache);
    auto [glip, node] = global_lip(lb_matrix(jac));
    (void)node;
    result.final_global_lip = glip;
    auto s_y = cosine_similarity(final_out, SimilarityKind::OutcomeCosine);
    auto rank = rank_metrics(ctx.s_g, s_y, config.k);
    result.final_ndcg = rank.mean_ndcg;
    result.final_err = rank.mean_err;
    if (config.task == Task::NodeClassification) {
        result.final_utility = accuracy(final_out, graph.labels, ctx.eval_mask);
    } else {
        EdgeScores test_scores = score_edges(final_out, ctx.test_edges);
        result.final_utility = auc(test_scores.logits, ctx.test_labels);
    }
    return result;
}

}  // namespace

TrainResult train_vanilla(const Graph& graph, const TrainConfig& config,
                          const EpochObserver& observer) {
    return run_training(graph, config, /*use_reg=*/false, observer);
}

TrainResult train_jacolip(const Graph& graph, const TrainConfig& config,
                          const EpochObserver& observer) {
    return run_training(graph, config, /*use_reg=*/true, observer);
}

}  // namespace jacolip
