#include <doctest.h>

#include <cmath>
#include <random>

#include "hcd/regression.hpp"

using namespace hcd;

namespace {

Matrix random_matrix(int rows, int cols, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(-1, 1);
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = uni(rng);
    return m;
}

Matrix smooth_targets(const Matrix& x, unsigned seed) {
    Matrix y(x.rows(), 2);
    std::mt19937 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (int i = 0; i < x.rows(); ++i) {
        y(i, 0) = std::sin(3.0 * x(i, 0)) + 0.5 * x(i, 1) + noise(rng);
        y(i, 1) = x(i, 0) * x(i, 1) + noise(rng);
    }
    return y;
}

RegressorConfig rfr_config(int trees, bool bootstrap, std::uint64_t seed,
                           int features = 0) {
    RegressorConfig cfg;
    cfg.kind = RegressorKind::rfr;
    cfg.rfr.num_trees = trees;
    cfg.rfr.bootstrap = bootstrap;
    cfg.rfr.rng_seed = seed;
    cfg.rfr.features_per_node = features;
    return cfg;
}

}  // namespace

TEST_CASE("same seed gives bit-identical forests") {
    const Matrix x = random_matrix(80, 3, 1);
    const Matrix y = smooth_targets(x, 2);
    const Matrix q = random_matrix(25, 3, 3);
    auto a = fit_regressor(rfr_config(16, true, 123), x, y);
    auto b = fit_regressor(rfr_config(16, true, 123), x, y);
    const Matrix pa = a->predict(q);
    const Matrix pb = b->predict(q);
    CHECK((pa - pb).cwiseAbs().maxCoeff() == 0.0);

    auto c = fit_regressor(rfr_config(16, true, 124), x, y);
    CHECK((pa - c->predict(q)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("constant targets give constant predictions") {
    const Matrix x = random_matrix(40, 2, 5);
    Matrix y(40, 2);
    y.col(0).setConstant(7.0);
    y.col(1).setConstant(-2.0);
    auto model = fit_regressor(rfr_config(8, true, 7), x, y);
    const Matrix pred = model->predict(random_matrix(10, 2, 6));
    for (int i = 0; i < 10; ++i) {
        CHECK(pred(i, 0) == doctest::Approx(7.0));
        CHECK(pred(i, 1) == doctest::Approx(-2.0));
    }
}

TEST_CASE("a single unbagged tree with all features memorizes distinct inputs") {
    const Matrix x = random_matrix(30, 3, 9);
    const Matrix y = random_matrix(30, 2, 10);
    auto model = fit_regressor(rfr_config(1, false, 1, 3), x, y);
    const Matrix pred = model->predict(x);
    for (int i = 0; i < 30; ++i)
        for (int c = 0; c < 2; ++c)
            CHECK(pred(i, c) == doctest::Approx(y(i, c)).epsilon(1e-12));
}

TEST_CASE("predictions stay within the per-channel target range") {
    const Matrix x = random_matrix(100, 3, 13);
    const Matrix y = smooth_targets(x, 14);
    auto model = fit_regressor(rfr_config(32, true, 21), x, y);
    const Matrix pred = model->predict(random_matrix(200, 3, 15));
    for (int c = 0; c < 2; ++c) {
        const double lo = y.col(c).minCoeff(), hi = y.col(c).maxCoeff();
        CHECK(pred.col(c).minCoeff() >= lo - 1e-12);
        CHECK(pred.col(c).maxCoeff() <= hi + 1e-12);
    }
}

TEST_CASE("out-of-bag error improves with more trees") {
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Matrix x = random_matrix(150, 3, 100 + unsigned(seed));
        const Matrix y = smooth_targets(x, 200 + unsigned(seed));
        auto small = fit_regressor(rfr_config(8, true, seed), x, y);
        auto large = fit_regressor(rfr_config(64, true, seed), x, y);
        if (rfr_oob_mse(*large) <= rfr_oob_mse(*small)) ++wins;
    }
    CHECK(wins >= 9);
}

TEST_CASE("OOB error is NaN without bootstrap") {
    const Matrix x = random_matrix(20, 2, 61);
    const Matrix y = random_matrix(20, 1, 62);
    auto model = fit_regressor(rfr_config(4, false, 3), x, y);
    CHECK(std::isnan(rfr_oob_mse(*model)));
}
