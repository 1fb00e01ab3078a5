#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "jacolip/plot.hpp"
#include "jacolip/train.hpp"

namespace fs = std::filesystem;
using namespace jacolip;

namespace {

constexpr const char* kVersion = "jacolip 0.1.0";

// ---------------------------------------------------------------- manifest

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FatalError("cannot hash missing file: " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

class Manifest {
public:
    Manifest(std::string path, std::string command) : path_(std::move(path)) {
        set("command", "\"" + command + "\"");
        set("code_version", std::string("\"") + kVersion + "\"");
        set("status", "\"running\"");
    }

    void set(const std::string& key, const std::string& json_value) { fields_[key] = json_value; }
    void set_number(const std::string& key, double v) {
        std::ostringstream s;
        s.precision(17);
        s << v;
        fields_[key] = s.str();
    }
    void set_string(const std::string& key, const std::string& v) { set(key, "\"" + v + "\""); }

    void dataset_hash(const std::vector<std::string>& files) {
        std::uint64_t h = 1469598103934665603ULL;
        for (const auto& f : files) h = h * 1099511628211ULL ^ fnv1a_file(f);
        std::ostringstream s;
        s << "\"" << std::hex << h << "\"";
        set("dataset_hash", s.str());
    }

    void phase(const std::string& name) {
        set_string("phase", name);
        write();
    }
    void timing(const std::string& name, double seconds) {
        timings_[name] = seconds;
    }
    void finalize(const std::string& status) {
        set_string("status", status);
        write();
    }
    void write() const {
        std::ofstream out(path_);
        if (!out) throw FatalError("cannot write manifest: " + path_);
        out << "{\n";
        bool first = true;
        for (const auto& [k, v] : fields_) {
            out << (first ? "" : ",\n") << "  \"" << k << "\": " << v;
            first = false;
        }
        out << (first ? "" : ",\n") << "  \"timings\": {";
        bool tf = true;
        out.precision(6);
        for (const auto& [k, v] : timings_) {
            out << (tf ? "" : ", ") << "\"" << k << "\": " << v;
            tf = false;
        }
        out << "}\n}\n";
    }

private:
    std::string path_;
    std::map<std::string, std::string> fields_;
    std::map<std::string, double> timings_;
};

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------- dataset

struct DatasetPaths {
    std::string dir;
    std::string edges() const { return dir + "/edges.txt"; }
    std::string features() const {
        std::string bin = dir + "/features.bin";
        return fs::exists(bin) ? bin : dir + "/features.txt";
    }
    std::string labels() const { return dir + "/labels.txt"; }
    std::string mask(const char* split) const { return dir + "/" + split + "_mask.txt"; }
    bool has_labels() const { return fs::exists(labels()); }
    bool has_masks() const {
        return fs::exists(mask("train")) && fs::exists(mask("val")) && fs::exists(mask("test"));
    }
    std::vector<std::string> existing_files() const {
        std::vector<std::string> out{edges(), features()};
        if (has_labels()) out.push_back(labels());
        if (has_masks())
            for (const char* s : {"train", "val", "test"}) out.push_back(mask(s));
        return out;
    }
};

Graph load_dataset(const DatasetPaths& p) {
    Graph g = load_graph(p.edges(), p.features(), p.has_labels() ? p.labels() : "");
    if (p.has_masks()) load_masks(g, p.mask("train"), p.mask("val"), p.mask("test"));
    return g;
}

// Flat key=value config file; CLI flags win over file values.
void apply_config_file(CLI::App& app, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open config file: " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw FatalError("config: expected key=value, got: " + line);
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        CLI::Option* opt = app.get_option_no_throw("--" + key);
        if (!opt) throw FatalError("config: unknown key: " + key);
        if (opt->count() == 0) opt->add_result(value);
    }
}

SimilarityKind parse_sim(const std::string& s) {
    if (s == "feature") return SimilarityKind::FeatureCosine;
    if (s == "structural") return SimilarityKind::StructuralJaccard;
    throw CLI::ValidationError("--sim", "must be 'feature' or 'structural'");
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("JACOLIP_THREADS")) return std::max(1, std::atoi(env));
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lipschitz-bounded fairness training for graph neural networks"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("--config", config_path, "flat key=value config file (flags win)");
    app.add_option("--seed", seed, "global RNG seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads (env JACOLIP_THREADS as fallback)");

    // ---- synth
    auto* synth = app.add_subcommand("synth", "generate a biased SBM dataset");
    SynthSpec spec;
    synth->add_option("--nodes", spec.n_nodes);
    synth->add_option("--blocks", spec.n_blocks);
    synth->add_option("--p-in", spec.p_intra);
    synth->add_option("--p-out", spec.p_inter);
    synth->add_option("--features", spec.feature_dim);
    synth->add_option("--classes", spec.n_classes);
    synth->add_option("--signal", spec.class_signal);
    synth->add_option("--bias", spec.bias_strength);

    // ---- train
    auto* train = app.add_subcommand("train", "train a model and emit dynamics + metrics");
    std::string data_dir, arch_str = "gcn", task_str = "node", fair_str = "none",
                sim_str = "feature";
    TrainConfig tc;
    train->add_option("--data", data_dir, "dataset directory")->required();
    train->add_option("--arch", arch_str, "gcn | sgc | gae");
    train->add_option("--task", task_str, "node | link");
    train->add_option("--fair", fair_str, "none | jacolip");
    train->add_option("--epochs", tc.epochs);
    train->add_option("--pretrain", tc.pretrain_epochs);
    train->add_option("--lr", tc.learning_rate);
    train->add_option("--weight-decay", tc.weight_decay);
    train->add_option("--u", tc.u, "regularizer weight");
    train->add_option("--k", tc.k, "ranking cutoff");
    train->add_option("--dropout", tc.dropout);
    train->add_option("--sim", sim_str, "feature | structural");
    train->add_option("--hidden", tc.hidden);
    train->add_option("--sgc-power", tc.sgc_power);

    // ---- eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string eval_data, eval_ckpt, eval_task = "node", eval_sim = "feature";
    std::size_t eval_k = 10;
    bool per_node = false;
    eval->add_option("--data", eval_data)->required();
    eval->add_option("--ckpt", eval_ckpt)->required();
    eval->add_option("--task", eval_task, "node | link");
    eval->add_option("--sim", eval_sim, "feature | structural");
    eval->add_option("--k", eval_k);
    eval->add_flag("--per-node", per_node, "also write per-node metric CSV");

    // ---- lipbound
    auto* lipbound = app.add_subcommand("lipbound", "compute Lipschitz bounds for a checkpoint");
    std::string lb_data, lb_ckpt;
    std::size_t probes = 0;
    double probe_eps = 1e-4;
    lipbound->add_option("--data", lb_data)->required();
    lipbound->add_option("--ckpt", lb_ckpt)->required();
    lipbound->add_option("--probes", probes, "empirical probe count (0 = skip)");
    lipbound->add_option("--eps", probe_eps, "probe perturbation norm");

    // ---- dynamics-plot
    auto* plot = app.add_subcommand("dynamics-plot", "render dynamics CSVs to SVG charts");
    std::vector<std::string> csv_paths;
    plot->add_option("--csv", csv_paths, "dynamics CSV file(s)")->required();

    try {
        app.parse(argc, argv);
        if (!config_path.empty()) apply_config_file(app, config_path);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const FatalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    (void)resolve_threads(threads);
    fs::create_directories(out_dir);

    try {
        if (*synth) {
            spec.seed = seed;
            Manifest manifest(out_dir + "/manifest.json", "synth");
            manifest.phase("generate");
            Timer t;
            Graph g = synth_sbm_biased(spec);
            split_nodes(g, 0.6, 0.2, 0.2, seed);
            DatasetPaths p{out_dir};
            save_graph(g, p.edges(), out_dir + "/features.txt", p.labels());
            save_masks(g, p.mask("train"), p.mask("val"), p.mask("test"));
            manifest.timing("generate", t.seconds());
            manifest.dataset_hash(p.existing_files());
            manifest.set("nodes", std::to_string(g.n_nodes));
            manifest.set("edges", std::to_string(g.n_edges()));
            manifest.finalize("ok");
            std::cout << "wrote dataset with " << g.n_nodes << " nodes, " << g.n_edges()
                      << " edges to " << out_dir << "\n";
            return 0;
        }

        if (*train) {
            tc.arch = arch_from_name(arch_str);
            tc.seed = seed;
            tc.sim_kind = parse_sim(sim_str);
            if (task_str == "node")
                tc.task = Task::NodeClassification;
            else if (task_str == "link")
                tc.task = Task::LinkPrediction;
            else
                throw CLI::ValidationError("--task", "must be 'node' or 'link'");
            bool use_jacolip;
            if (fair_str == "none")
                use_jacolip = false;
            else if (fair_str == "jacolip")
                use_jacolip = true;
            else
                throw CLI::ValidationError("--fair", "must be 'none' or 'jacolip'");
            if (tc.task == Task::LinkPrediction && tc.arch == Arch::SGC)
                throw CLI::ValidationError("--arch", "sgc supports the node task only");
            if (tc.task == Task::NodeClassification && tc.arch == Arch::GAE)
                throw CLI::ValidationError("--arch", "gae supports the link task only");

            Manifest manifest(out_dir + "/manifest.json", "train");
            DatasetPaths p{data_dir};
            manifest.dataset_hash(p.existing_files());
            manifest.set_string("arch", arch_str);
            manifest.set_string("task", task_str);
            manifest.set_string("fair", fair_str);
            manifest.set_string("sim", sim_str);
            manifest.set("seed", std::to_string(seed));
            manifest.set("epochs", std::to_string(tc.epochs));
            manifest.set("pretrain", std::to_string(tc.pretrain_epochs));
            manifest.set_number("lr", tc.learning_rate);
            manifest.set_number("weight_decay", tc.weight_decay);
            manifest.set_number("u", tc.u);
            manifest.set("k", std::to_string(tc.k));
            manifest.set_number("dropout", tc.dropout);
            manifest.phase("load");

            Timer t_load;
            Graph g = load_dataset(p);
            manifest.timing("load", t_load.seconds());

            manifest.phase("train");
            Timer t_train;
            TrainResult result = use_jacolip ? train_jacolip(g, tc) : train_vanilla(g, tc);
            manifest.timing("train", t_train.seconds());
            if (result.diverged) {
                manifest.finalize("diverged");
                std::cerr << "error: training diverged; last good checkpoint kept\n";
            }

            manifest.phase("emit");
            std::string ckpt = out_dir + "/model.ckpt";
            std::string csv = out_dir + "/dynamics.csv";
            std::string metrics = out_dir + "/metrics.json";
            save_checkpoint(result.model, ckpt);
            result.log.write_csv(csv);
            {
                RankMetricReport rep;
                rep.k = tc.k;
                rep.mean_ndcg = result.final_ndcg;
                rep.mean_err = result.final_err;
                std::ofstream out(metrics);
                out << metric_report_json(
                           rep, tc.task == Task::NodeClassification ? "acc" : "auc",
                           result.final_utility)
                    << "\n";
            }
            manifest.set_string("checkpoint", ckpt);
            manifest.set_string("dynamics_csv", csv);
            manifest.set_string("metrics_json", metrics);
            manifest.set_number("final_global_lip", result.final_global_lip);
            manifest.set_number("final_utility", result.final_utility);
            manifest.set_number("final_ndcg", result.final_ndcg);
            manifest.finalize(result.diverged ? "diverged" : "ok");
            if (result.diverged) return 1;
            std::cout << "final utility " << result.final_utility << ", ndcg@" << tc.k << " "
                      << result.final_ndcg << ", global_lip " << result.final_global_lip << "\n";
            return 0;
        }

        if (*eval) {
            Manifest manifest(out_dir + "/manifest.json", "eval");
            DatasetPaths p{eval_data};
            manifest.dataset_hash(p.existing_files());
            manifest.phase("eval");
            Graph g = load_dataset(p);
            if (eval_k >= g.n_nodes) {
                std::cerr << "error: --k must be smaller than the node count\n";
                return 2;
            }
            Model model = load_checkpoint(eval_ckpt);
            SimilarityKind sim = parse_sim(eval_sim);

            SimilarityMatrix s_g = (sim == SimilarityKind::StructuralJaccard)
                                       ? jaccard_similarity(g.adjacency)
                                       : cosine_similarity(g.features,
                                                           SimilarityKind::FeatureCosine);
            double utility;
            std::string utility_name;
            DenseMatrix outputs;
            ForwardCache cache;
            if (eval_task == "node") {
                if (!g.has_labels())
                    throw FatalError("eval: node task requires a label file");
                if (g.train_mask.empty()) split_nodes(g, 0.6, 0.2, 0.2, seed);
                SparseMatrix a_hat = normalize_adjacency(g).matrix;
                outputs = model_forward(model, a_hat, g.features, cache);
                bool has_test = false;
                for (char m : g.test_mask) has_test |= (m != 0);
                utility = accuracy(outputs, g.labels, has_test ? g.test_mask : g.train_mask);
                utility_name = "acc";
            } else if (eval_task == "link") {
                EdgeSplit split = split_edges(g, 0.85, 0.05, 0.10, seed);
                outputs = model_forward(model, split.train_adjacency, g.features, cache);
                std::vector<std::pair<std::size_t, std::size_t>> edges = split.test_pos;
                std::vector<double> labels(split.test_pos.size(), 1.0);
                edges.insert(edges.end(), split.test_neg.begin(), split.test_neg.end());
                labels.insert(labels.end(), split.test_neg.size(), 0.0);
                EdgeScores scores = score_edges(outputs, edges);
                utility = auc(scores.logits, labels);
                utility_name = "auc";
            } else {
                throw CLI::ValidationError("--task", "must be 'node' or 'link'");
            }
            auto s_y = cosine_similarity(outputs, SimilarityKind::OutcomeCosine);
            RankMetricReport rep = rank_metrics(s_g, s_y, eval_k);

            std::string per_node_path;
            if (per_node) {
                per_node_path = out_dir + "/per_node.csv";
                std::ofstream out(per_node_path);
                out.precision(17);
                out << "node,ndcg,err\n";
                for (std::size_t i = 0; i < rep.ndcg_per_node.size(); ++i)
                    out << i << "," << rep.ndcg_per_node[i] << "," << rep.err_per_node[i] << "\n";
            }
            std::string json = metric_report_json(rep, utility_name, utility, per_node_path);
            std::ofstream(out_dir + "/metrics.json") << json << "\n";
            std::cout << json << "\n";
            manifest.finalize("ok");
            return 0;
        }

        if (*lipbound) {
            Manifest manifest(out_dir + "/manifest.json", "lipbound");
            DatasetPaths p{lb_data};
            manifest.dataset_hash(p.existing_files());
            manifest.phase("bound");
            Graph g = load_dataset(p);
            Model model = load_checkpoint(lb_ckpt);
            if (model.input_dim() != g.feature_dim())
                throw FatalError("lipbound: checkpoint input dim " +
                                 std::to_string(model.input_dim()) + " != dataset feature dim " +
                                 std::to_string(g.feature_dim()));
            SparseMatrix a_hat = normalize_adjacency(g).matrix;
            ForwardCache cache;
            model_forward(model, a_hat, g.features, cache);
            NodeJacobianSet jac = node_jacobians(model, a_hat, cache);
            LipReport rep = lip_report(model, a_hat, cache, jac);
            if (probes > 0) {
                EmpiricalLipOptions opts;
                opts.n_probes = probes;
                opts.eps = probe_eps;
                opts.seed = seed;
                opts.require_same_region = model.arch != Arch::SGC;
                rep.empirical_lower = empirical_lip(model, a_hat, g.features, opts).max_ratio;
            }
            std::ofstream(out_dir + "/lipreport.json") << rep.to_json() << "\n";
            std::cout << rep.to_json() << "\n";
            manifest.finalize("ok");
            return 0;
        }

        if (*plot) {
            Manifest manifest(out_dir + "/manifest.json", "dynamics-plot");
            manifest.phase("plot");
            std::vector<DynamicsLog> logs;
            std::vector<std::string> labels;
            for (const auto& path : csv_paths) {
                logs.push_back(DynamicsLog::read_csv(path));
                if (logs.back().records.empty()) throw FatalError(path + ": empty dynamics CSV");
                labels.push_back(fs::path(path).stem().string());
            }
            auto paths = write_dynamics_charts(logs, labels, out_dir);
            for (const auto& pth : paths) std::cout << pth << "\n";
            manifest.finalize("ok");
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
