#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "jacolip/graph.hpp"
#include "jacolip/model.hpp"

using namespace jacolip;

namespace {

DenseMatrix random_dense(Rng& rng, std::size_t r, std::size_t c) {
    DenseMatrix m(r, c);
    for (auto& v : m.data()) v = rng.uniform(-1.0, 1.0);
    return m;
}

SparseMatrix random_a_hat(Rng& rng, std::size_t n, double density) {
    Graph g;
    g.n_nodes = n;
    std::vector<std::tuple<std::size_t, std::size_t, double>> t;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng.uniform() < density) {
                t.emplace_back(i, j, 1.0);
                t.emplace_back(j, i, 1.0);
            }
    g.adjacency = SparseMatrix::from_triplets(n, n, std::move(t));
    g.features = DenseMatrix(n, 1);
    return normalize_adjacency(g).matrix;
}

// Independent step-by-step dense recomputation of a graph-conv stack.
DenseMatrix dense_gcn_oracle(const Model& model, const DenseMatrix& a, const DenseMatrix& x) {
    DenseMatrix h = x;
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        DenseMatrix p = (model.layers[l].kind == LayerKind::GraphConv) ? matmul(a, h) : h;
        DenseMatrix z = matmul(p, model.weights[l]);
        if (model.layers[l].activation == Activation::Relu)
            for (auto& v : z.data()) v = std::max(v, 0.0);
        h = std::move(z);
    }
    return h;
}

}  // namespace

TEST_CASE("init_params determinism and Glorot range") {
    Model a = make_gcn(16, 16, 16);
    Model b = make_gcn(16, 16, 16);
    init_params(a, 42);
    init_params(b, 42);
    for (std::size_t l = 0; l < a.weights.size(); ++l) CHECK(a.weights[l].bit_equal(b.weights[l]));

    double bound = std::sqrt(6.0 / 32.0);  // ~0.4330 for a 16x16 layer
    for (double v : a.weights[0].data()) {
        CHECK(v > -bound);
        CHECK(v < bound);
    }

    Model c = make_gcn(16, 16, 16);
    init_params(c, 43);
    CHECK_FALSE(c.weights[0].bit_equal(a.weights[0]));
}

TEST_CASE("gcn_forward identity configuration passes nonnegative input through") {
    Model m = make_gcn(3, 3, 3);
    m.weights[0] = DenseMatrix::identity(3);
    m.weights[1] = DenseMatrix::identity(3);
    auto a = SparseMatrix::identity(4);
    DenseMatrix x(4, 3);
    Rng rng(1);
    for (auto& v : x.data()) v = rng.uniform(0.0, 2.0);  // >= 0 keeps ReLU inactive
    ForwardCache cache;
    auto y = gcn_forward(m, a, x, cache);
    CHECK(y.bit_equal(x));

    DenseMatrix zero(4, 3, 0.0);
    ForwardCache c2;
    auto y0 = gcn_forward(m, a, zero, c2);
    for (double v : y0.data()) CHECK(v == 0.0);
}

TEST_CASE("gcn_forward matches dense oracle on a random 6-node graph") {
    Rng rng(7);
    auto a_hat = random_a_hat(rng, 6, 0.4);
    Model m = make_gcn(5, 4, 3);
    init_params(m, 2);
    auto x = random_dense(rng, 6, 5);
    ForwardCache cache;
    auto y = gcn_forward(m, a_hat, x, cache);
    auto want = dense_gcn_oracle(m, a_hat.densify(), x);
    for (std::size_t i = 0; i < y.size(); ++i)
        CHECK(std::abs(y.data()[i] - want.data()[i]) < 1e-12);
    CHECK(y.bit_equal(cache.output));
}

TEST_CASE("sgc_forward powers") {
    Rng rng(3);
    auto x = random_dense(rng, 3, 4);
    SUBCASE("K=0 is XW") {
        Model m = make_sgc(4, 2, 0);
        init_params(m, 1);
        auto a_hat = random_a_hat(rng, 3, 0.6);
        ForwardCache cache;
        auto y = sgc_forward(m, a_hat, x, cache);
        auto want = matmul(x, m.weights[0]);
        CHECK(y.bit_equal(want));
    }
    SUBCASE("identity adjacency, any K, is XW") {
        Model m = make_sgc(4, 2, 3);
        init_params(m, 1);
        ForwardCache cache;
        auto y = sgc_forward(m, SparseMatrix::identity(3), x, cache);
        auto want = matmul(x, m.weights[0]);
        for (std::size_t i = 0; i < y.size(); ++i)
            CHECK(std::abs(y.data()[i] - want.data()[i]) < 1e-12);
    }
    SUBCASE("K=2 path graph vs explicit dense oracle") {
        Graph g;
        g.n_nodes = 3;
        g.adjacency = SparseMatrix::from_triplets(
            3, 3, {{0, 1, 1.}, {1, 0, 1.}, {1, 2, 1.}, {2, 1, 1.}});
        g.features = DenseMatrix(3, 1);
        auto a_hat = normalize_adjacency(g).matrix;
        Model m = make_sgc(4, 2, 2);
        init_params(m, 6);
        ForwardCache cache;
        auto y = sgc_forward(m, a_hat, x, cache);
        auto ad = a_hat.densify();
        auto want = matmul(matmul(ad, matmul(ad, x)), m.weights[0]);
        for (std::size_t i = 0; i < y.size(); ++i)
            CHECK(std::abs(y.data()[i] - want.data()[i]) < 1e-12);
    }
}

TEST_CASE("gae_forward edge scores") {
    Model m = make_gae(4, 4, 3);
    init_params(m, 5);
    SUBCASE("zero embedding gives probability 0.5") {
        for (auto& w : m.weights)
            for (auto& v : w.data()) v = 0.0;
        DenseMatrix x(3, 4, 1.0);
        ForwardCache cache;
        auto scores = gae_forward(m, SparseMatrix::identity(3), x,
                                  {{0, 1}, {1, 2}}, cache);
        for (double p : scores.probabilities) CHECK(p == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("aligned large embeddings saturate") {
        DenseMatrix z(2, 3, 0.0);
        z(0, 0) = 10.0;
        z(1, 0) = 10.0;
        auto scores = score_edges(z, {{0, 1}});
        CHECK(scores.logits[0] == doctest::Approx(100.0));
        CHECK(scores.probabilities[0] > 1.0 - 1e-12);
    }
    SUBCASE("random case vs dense encoder oracle") {
        Rng rng(8);
        auto a_hat = random_a_hat(rng, 5, 0.5);
        auto x = random_dense(rng, 5, 4);
        ForwardCache cache;
        auto scores = gae_forward(m, a_hat, x, {{0, 4}, {2, 3}}, cache);
        auto z = dense_gcn_oracle(m, a_hat.densify(), x);
        for (std::size_t e = 0; e < scores.edges.size(); ++e) {
            auto [u, v] = scores.edges[e];
            double logit = 0.0;
            for (std::size_t c = 0; c < z.cols(); ++c) logit += z(u, c) * z(v, c);
            CHECK(std::abs(scores.logits[e] - logit) < 1e-12);
        }
    }
    SUBCASE("invalid node id is fatal") {
        DenseMatrix x(3, 4, 0.5);
        ForwardCache cache;
        CHECK_THROWS_AS(gae_forward(m, SparseMatrix::identity(3), x, {{0, 9}}, cache),
                        FatalError);
    }
}

TEST_CASE("permutation equivariance of GCN and SGC") {
    Rng rng(13);
    const std::size_t n = 7;
    auto a_hat = random_a_hat(rng, n, 0.4);
    auto x = random_dense(rng, n, 4);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_index(i)]);

    auto ad = a_hat.densify();
    std::vector<std::tuple<std::size_t, std::size_t, double>> t;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (ad(i, j) != 0.0) t.emplace_back(perm[i], perm[j], ad(i, j));
    auto pa = SparseMatrix::from_triplets(n, n, std::move(t));
    DenseMatrix px(n, x.cols());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < x.cols(); ++c) px(perm[i], c) = x(i, c);

    for (int arch = 0; arch < 2; ++arch) {
        Model m = (arch == 0) ? make_gcn(4, 5, 3) : make_sgc(4, 3, 2);
        init_params(m, 4);
        ForwardCache c1, c2;
        auto y = model_forward(m, a_hat, x, c1);
        auto py = model_forward(m, pa, px, c2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < y.cols(); ++c)
                CHECK(std::abs(py(perm[i], c) - y(i, c)) < 1e-10);
    }
}

TEST_CASE("SGC linearity and GCN positive homogeneity in final weights") {
    Rng rng(21);
    auto a_hat = random_a_hat(rng, 6, 0.5);

    Model sgc = make_sgc(3, 2, 2);
    init_params(sgc, 9);
    auto x1 = random_dense(rng, 6, 3);
    auto x2 = random_dense(rng, 6, 3);
    double alpha = 0.7, beta = -1.3;
    DenseMatrix combo = add(scale(x1, alpha), scale(x2, beta));
    ForwardCache c1, c2, c3;
    auto y_combo = sgc_forward(sgc, a_hat, combo, c1);
    auto y_sum = add(scale(sgc_forward(sgc, a_hat, x1, c2), alpha),
                     scale(sgc_forward(sgc, a_hat, x2, c3), beta));
    for (std::size_t i = 0; i < y_combo.size(); ++i)
        CHECK(std::abs(y_combo.data()[i] - y_sum.data()[i]) < 1e-10);

    Model gcn = make_gcn(3, 4, 2);
    init_params(gcn, 10);
    ForwardCache c4, c5;
    auto y = gcn_forward(gcn, a_hat, x1, c4);
    Model scaled = gcn;
    scaled.weights.back() = scale(gcn.weights.back(), 2.0);
    auto y2 = gcn_forward(scaled, a_hat, x1, c5);
    CHECK(scale(y, 2.0).bit_equal(y2));
}

TEST_CASE("cache recomputation reproduces output bit-identically") {
    Rng rng(31);
    auto a_hat = random_a_hat(rng, 5, 0.5);
    Model m = make_gcn(3, 4, 2);
    init_params(m, 12);
    auto x = random_dense(rng, 5, 3);
    ForwardCache cache;
    auto y = gcn_forward(m, a_hat, x, cache);
    ForwardCache again;
    auto y2 = gcn_forward(m, a_hat, cache.inputs.front(), again);
    CHECK(y.bit_equal(y2));
    CHECK(cache.weight_stamp == weight_stamp(m));
}

TEST_CASE("dropout masks are applied, scaled, and seed-deterministic") {
    Rng rng(41);
    auto a_hat = random_a_hat(rng, 8, 0.5);
    Model m = make_gcn(4, 6, 3);
    init_params(m, 14);
    auto x = random_dense(rng, 8, 4);

    Rng d1(99), d2(99);
    ForwardCache c1, c2, c3;
    ForwardOptions o1{0.5, &d1}, o2{0.5, &d2};
    auto y1 = gcn_forward(m, a_hat, x, c1, o1);
    auto y2 = gcn_forward(m, a_hat, x, c2, o2);
    CHECK(y1.bit_equal(y2));
    auto y_plain = gcn_forward(m, a_hat, x, c3);
    CHECK_FALSE(y1.bit_equal(y_plain));
    REQUIRE(!c1.dropout_mask.empty());
    for (double v : c1.dropout_mask[0].data()) CHECK((v == 0.0 || v == doctest::Approx(2.0)));
}

TEST_CASE("checkpoint round-trip is bit-exact and rejects corruption") {
    namespace fs = std::filesystem;
    auto path = (fs::temp_directory_path() / "jacolip_ckpt_test.bin").string();
    for (Model m : {make_gcn(5, 4, 3), make_sgc(5, 3, 2), make_gae(5, 4, 2)}) {
        init_params(m, 77);
        save_checkpoint(m, path);
        Model r = load_checkpoint(path);
        CHECK(r.arch == m.arch);
        CHECK(r.sgc_power == m.sgc_power);
        REQUIRE(r.n_layers() == m.n_layers());
        for (std::size_t l = 0; l < m.n_layers(); ++l) {
            CHECK(r.layers[l].kind == m.layers[l].kind);
            CHECK(r.layers[l].activation == m.layers[l].activation);
            CHECK(r.weights[l].bit_equal(m.weights[l]));
        }
    }
    std::ofstream(path) << "not a checkpoint";
    CHECK_THROWS_AS(load_checkpoint(path), FatalError);
    fs::remove(path);
}

TEST_CASE("model validation rejects dimension breaks") {
    Model m = make_gcn(4, 5, 3);
    init_params(m, 1);
    CHECK_NOTHROW(m.validate());
    m.weights[0] = DenseMatrix(4, 7);
    CHECK_THROWS_AS(m.validate(), FatalError);
}
