#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "jacolip/graph.hpp"

using namespace jacolip;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("jacolip_graph_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream(path) << text;
}

}  // namespace

TEST_CASE("load_graph basic parsing, symmetrization, self-loop drop") {
    TempDir d;
    write_file(d.file("edges.txt"), "# comment line\n0\t1\n1 0\n0 0\n");
    write_file(d.file("features.txt"), "2 2\n1.0 0.0\n0.0 1.0\n");
    Graph g = load_graph(d.file("edges.txt"), d.file("features.txt"));
    CHECK(g.n_nodes == 2);
    CHECK(g.n_edges() == 1);  // duplicate merged, self-loop dropped
    CHECK(g.adjacency.at(0, 1) == 1.0);
    CHECK(g.adjacency.at(1, 0) == 1.0);
    CHECK(g.adjacency.at(0, 0) == 0.0);
}

TEST_CASE("load_graph self-loop only gives empty adjacency") {
    TempDir d;
    write_file(d.file("edges.txt"), "0 0\n");
    write_file(d.file("features.txt"), "1 1\n0.5\n");
    Graph g = load_graph(d.file("edges.txt"), d.file("features.txt"));
    CHECK(g.adjacency.nnz() == 0);
}

TEST_CASE("load_graph out-of-range node id is fatal with line number") {
    TempDir d;
    write_file(d.file("edges.txt"), "0 1\n0 5\n");
    write_file(d.file("features.txt"), "2 1\n0\n0\n");
    try {
        load_graph(d.file("edges.txt"), d.file("features.txt"));
        FAIL("expected FatalError");
    } catch (const FatalError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);  // line number
    }
}

TEST_CASE("load_graph label row-count mismatch is fatal") {
    TempDir d;
    write_file(d.file("edges.txt"), "0 1\n");
    write_file(d.file("features.txt"), "2 1\n0\n1\n");
    write_file(d.file("labels.txt"), "0\n");
    CHECK_THROWS_AS(load_graph(d.file("edges.txt"), d.file("features.txt"), d.file("labels.txt")),
                    FatalError);
}

TEST_CASE("normalize_adjacency hand oracles") {
    SUBCASE("single edge on 2 nodes") {
        Graph g;
        g.n_nodes = 2;
        g.adjacency = SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}});
        g.features = DenseMatrix(2, 1);
        auto a = normalize_adjacency(g).matrix;
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) CHECK(a.at(i, j) == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("isolated single node") {
        Graph g;
        g.n_nodes = 1;
        g.adjacency = SparseMatrix(1, 1);
        g.features = DenseMatrix(1, 1);
        CHECK(normalize_adjacency(g).matrix.at(0, 0) == 1.0);
    }
    SUBCASE("3-node path off-diagonal") {
        Graph g;
        g.n_nodes = 3;
        g.adjacency = SparseMatrix::from_triplets(
            3, 3, {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 1.0}, {2, 1, 1.0}});
        g.features = DenseMatrix(3, 1);
        auto a = normalize_adjacency(g).matrix;
        // Node 0 degree(+loop)=2, node 1 degree(+loop)=3.
        CHECK(a.at(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
    }
}

TEST_CASE("normalize_adjacency symmetry and entry/row-sum ranges") {
    SynthSpec spec;
    spec.n_nodes = 60;
    spec.seed = 3;
    Graph g = synth_sbm_biased(spec);
    auto a = normalize_adjacency(g).matrix;
    auto dense = a.densify();
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < g.n_nodes; ++j) {
            CHECK(std::abs(dense(i, j) - dense(j, i)) < 1e-12);
            if (dense(i, j) != 0.0) {
                CHECK(dense(i, j) > 0.0);
                CHECK(dense(i, j) <= 1.0);
            }
            row_sum += dense(i, j);
        }
        CHECK(row_sum > 0.0);
    }
}

TEST_CASE("graph save/load round-trip, text and binary features") {
    SynthSpec spec;
    spec.n_nodes = 25;
    spec.seed = 9;
    Graph g = synth_sbm_biased(spec);
    split_nodes(g, 0.6, 0.2, 0.2, 1);
    TempDir d;
    for (bool binary : {false, true}) {
        save_graph(g, d.file("e.txt"), d.file("f.dat"), d.file("l.txt"), binary);
        save_masks(g, d.file("tr.txt"), d.file("va.txt"), d.file("te.txt"));
        Graph h = load_graph(d.file("e.txt"), d.file("f.dat"), d.file("l.txt"));
        load_masks(h, d.file("tr.txt"), d.file("va.txt"), d.file("te.txt"));
        CHECK(h.n_nodes == g.n_nodes);
        CHECK(h.adjacency.densify().bit_equal(g.adjacency.densify()));
        CHECK(h.features.bit_equal(g.features));
        CHECK(h.labels == g.labels);
        CHECK(h.train_mask == g.train_mask);
        CHECK(h.val_mask == g.val_mask);
        CHECK(h.test_mask == g.test_mask);
    }
}

TEST_CASE("synth_sbm_biased determinism and bias channel behavior") {
    SynthSpec a, b;
    a.n_nodes = b.n_nodes = 80;
    a.seed = b.seed = 5;
    a.bias_strength = b.bias_strength = 1.5;
    Graph ga = synth_sbm_biased(a);
    Graph gb = synth_sbm_biased(b);
    CHECK(ga.features.bit_equal(gb.features));
    CHECK(ga.adjacency.densify().bit_equal(gb.adjacency.densify()));
    CHECK(ga.labels == gb.labels);
    CHECK(a.block_of == b.block_of);

    // bias 0: appended channel is pure noise, per-block means near zero.
    SynthSpec z;
    z.n_nodes = 300;
    z.bias_strength = 0.0;
    z.seed = 11;
    Graph gz = synth_sbm_biased(z);
    std::size_t bias_col = gz.feature_dim() - 1;
    double mean[2] = {0, 0};
    std::size_t cnt[2] = {0, 0};
    for (std::size_t i = 0; i < gz.n_nodes; ++i) {
        int blk = z.block_of[i];
        mean[blk] += gz.features(i, bias_col);
        ++cnt[blk];
    }
    for (int blk = 0; blk < 2; ++blk) CHECK(std::abs(mean[blk] / double(cnt[blk])) < 0.1);
}

TEST_CASE("synth_sbm_biased intra-block density near p_in") {
    double total_density = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SynthSpec spec;
        spec.n_nodes = 300;
        spec.p_intra = 0.1;
        spec.p_inter = 0.01;
        spec.seed = seed;
        Graph g = synth_sbm_biased(spec);
        std::size_t intra_edges = 0, intra_pairs = 0;
        for (std::size_t i = 0; i < g.n_nodes; ++i)
            for (std::size_t j = i + 1; j < g.n_nodes; ++j)
                if (spec.block_of[i] == spec.block_of[j]) {
                    ++intra_pairs;
                    if (g.adjacency.at(i, j) != 0.0) ++intra_edges;
                }
        total_density += double(intra_edges) / double(intra_pairs);
    }
    double mean_density = total_density / 5.0;
    CHECK(mean_density > 0.07);
    CHECK(mean_density < 0.13);
}

TEST_CASE("split_nodes sizes, determinism, and degenerate ratios") {
    SynthSpec spec;
    spec.n_nodes = 100;
    spec.seed = 2;
    Graph g = synth_sbm_biased(spec);

    split_nodes(g, 1.0, 0.0, 0.0, 0);
    for (std::size_t i = 0; i < 100; ++i) CHECK(g.train_mask[i] == 1);

    split_nodes(g, 0.5, 0.25, 0.25, 4);
    auto count = [](const std::vector<char>& m) {
        std::size_t c = 0;
        for (char v : m) c += (v != 0);
        return c;
    };
    CHECK(count(g.train_mask) == 50);
    CHECK(count(g.val_mask) == 25);
    CHECK(count(g.test_mask) == 25);
    for (std::size_t i = 0; i < 100; ++i)
        CHECK(int(g.train_mask[i]) + g.val_mask[i] + g.test_mask[i] == 1);

    Graph h = g;
    split_nodes(h, 0.5, 0.25, 0.25, 4);
    CHECK(h.train_mask == g.train_mask);
    CHECK(h.val_mask == g.val_mask);

    CHECK_THROWS_AS(split_nodes(g, 0.5, 0.1, 0.1, 0), FatalError);
}

TEST_CASE("split_edges partitions, negatives, and dense-graph failure") {
    SUBCASE("complete K3 has no room for negatives") {
        Graph g;
        g.n_nodes = 3;
        g.adjacency = SparseMatrix::from_triplets(
            3, 3,
            {{0, 1, 1.}, {1, 0, 1.}, {0, 2, 1.}, {2, 0, 1.}, {1, 2, 1.}, {2, 1, 1.}});
        g.features = DenseMatrix(3, 1);
        CHECK_THROWS_AS(split_edges(g, 0.34, 0.33, 0.33, 0), FatalError);
    }
    SUBCASE("sizes and disjointness on a synthetic graph") {
        SynthSpec spec;
        spec.n_nodes = 120;
        spec.p_intra = 0.15;
        spec.seed = 8;
        Graph g = synth_sbm_biased(spec);
        std::size_t m = g.n_edges();
        REQUIRE(m >= 40);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            EdgeSplit s = split_edges(g, 0.85, 0.05, 0.10, seed);
            CHECK(s.train_pos.size() + s.val_pos.size() + s.test_pos.size() == m);
            CHECK(s.train_neg.size() == s.train_pos.size());
            CHECK(s.val_neg.size() == s.val_pos.size());
            CHECK(s.test_neg.size() == s.test_pos.size());

            std::set<std::pair<std::size_t, std::size_t>> pos, neg;
            auto canon = [](std::pair<std::size_t, std::size_t> e) {
                if (e.first > e.second) std::swap(e.first, e.second);
                return e;
            };
            for (const auto* lst : {&s.train_pos, &s.val_pos, &s.test_pos})
                for (auto e : *lst) CHECK(pos.insert(canon(e)).second);  // pairwise disjoint
            for (const auto* lst : {&s.train_neg, &s.val_neg, &s.test_neg})
                for (auto e : *lst) {
                    CHECK(neg.insert(canon(e)).second);
                    CHECK(g.adjacency.at(e.first, e.second) == 0.0);
                }
            // Train adjacency only contains train positives.
            CHECK(s.train_adjacency.rows() == g.n_nodes);
        }
    }
}
