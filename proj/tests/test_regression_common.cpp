#include <doctest.h>

#include <random>
#include <sstream>

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

RegressorConfig config_for(RegressorKind kind) {
    RegressorConfig cfg;
    cfg.kind = kind;
    cfg.rfr.rng_seed = 5;
    cfg.hpt.num_neighbors = 7;
    return cfg;
}

const RegressorKind kAllKinds[] = {RegressorKind::gpr, RegressorKind::svr, RegressorKind::rfr,
                                   RegressorKind::hpt};

}  // namespace

TEST_CASE("kind names round-trip") {
    for (auto kind : kAllKinds) CHECK(regressor_kind_from_string(to_string(kind)) == kind);
    CHECK_THROWS_AS(regressor_kind_from_string("nope"), std::invalid_argument);
}

TEST_CASE("fit rejects malformed training data") {
    RegressorConfig cfg = config_for(RegressorKind::rfr);
    CHECK_THROWS_AS(fit_regressor(cfg, Matrix(0, 2), Matrix(0, 1)), std::invalid_argument);
    CHECK_THROWS_AS(fit_regressor(cfg, Matrix::Zero(4, 2), Matrix::Zero(3, 1)),
                    std::invalid_argument);
    Matrix bad = Matrix::Zero(4, 2);
    bad(1, 1) = std::nan("");
    CHECK_THROWS_AS(fit_regressor(cfg, bad, Matrix::Zero(4, 1)), std::invalid_argument);
}

TEST_CASE("fit and predict are shape-correct and deterministic for every kind") {
    const Matrix x = random_matrix(40, 3, 1);
    const Matrix y = random_matrix(40, 2, 2);
    const Matrix q = random_matrix(11, 3, 3);
    for (auto kind : kAllKinds) {
        CAPTURE(to_string(kind));
        auto model = fit_regressor(config_for(kind), x, y);
        CHECK(model->kind() == kind);
        CHECK(model->input_dim() == 3);
        CHECK(model->output_dim() == 2);
        const Matrix p1 = model->predict(q);
        CHECK(p1.rows() == 11);
        CHECK(p1.cols() == 2);
        CHECK(p1.allFinite());
        // refit + repredict is bit-identical
        auto again = fit_regressor(config_for(kind), x, y);
        CHECK((p1 - again->predict(q)).cwiseAbs().maxCoeff() == 0.0);
        CHECK_THROWS_AS(model->predict(Matrix::Zero(2, 4)), std::invalid_argument);
    }
}

TEST_CASE("serialized models reload to identical predictions") {
    const Matrix x = random_matrix(35, 2, 7);
    const Matrix y = random_matrix(35, 3, 8);
    const Matrix q = random_matrix(13, 2, 9);
    for (auto kind : kAllKinds) {
        CAPTURE(to_string(kind));
        auto model = fit_regressor(config_for(kind), x, y);
        std::stringstream blob(std::ios::in | std::ios::out | std::ios::binary);
        save_regressor(*model, blob);
        const std::string bytes = blob.str();
        CHECK(bytes.substr(0, 5) == "HCDR1");
        CHECK(std::uint8_t(bytes[5]) == std::uint8_t(kind));
        blob.seekg(0);
        auto loaded = load_regressor(blob);
        CHECK(loaded->kind() == kind);
        CHECK((model->predict(q) - loaded->predict(q)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("load rejects a corrupted magic") {
    std::stringstream blob(std::ios::in | std::ios::out | std::ios::binary);
    blob << "XXDR1garbage";
    CHECK_THROWS_AS(load_regressor(blob), std::runtime_error);
}

TEST_CASE("regress_both_ways produces co-registered predictions") {
    // X: 2 channels, Y: 1 channel = invertible map of X's first channel
    const int n1 = 12, n2 = 10;
    ImageStack img_x(n1, n2, 2, "optical");
    ImageStack img_y(n1, n2, 1, "sar");
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> uni(0, 1);
    for (int r = 0; r < n1; ++r)
        for (int c = 0; c < n2; ++c) {
            img_x.at(r, c, 0) = uni(rng);
            img_x.at(r, c, 1) = uni(rng);
            img_y.at(r, c, 0) = 2.0 * img_x.at(r, c, 0) + 0.5;
        }

    TrainingSet trainset;
    std::mt19937 pick(3);
    std::uniform_int_distribution<std::size_t> px(0, img_x.num_pixels() - 1);
    for (int i = 0; i < 60; ++i) {
        const std::size_t p = px(pick);
        TrainingPair pair;
        pair.pixel = p;
        pair.x = {img_x.pixel(p)[0], img_x.pixel(p)[1]};
        pair.y = {img_y.pixel(p)[0]};
        trainset.pairs.push_back(pair);
    }

    RegressorConfig cfg = config_for(RegressorKind::hpt);
    const auto two_way = regress_both_ways(img_x, img_y, trainset, cfg);
    CHECK(two_way.y_hat.direction == "x_to_y");
    CHECK(two_way.x_hat.direction == "y_to_x");
    CHECK(two_way.y_hat.image.height == n1);
    CHECK(two_way.y_hat.image.width == n2);
    CHECK(two_way.y_hat.image.channels == 1);
    CHECK(two_way.x_hat.image.channels == 2);
    two_way.y_hat.image.validate();
    two_way.x_hat.image.validate();

    // with no change anywhere, forward predictions should track y closely
    double err = 0.0;
    for (std::size_t p = 0; p < img_y.num_pixels(); ++p)
        err += std::abs(two_way.y_hat.image.data[p] - img_y.data[p]);
    err /= double(img_y.num_pixels());
    CHECK(err < 0.3);
}

TEST_CASE("regress_both_ways rejects dimension mismatches") {
    ImageStack img_x(4, 4, 2), img_y(4, 4, 1);
    TrainingSet trainset;
    TrainingPair pair;
    pair.pixel = 0;
    pair.x = {0.0, 0.0, 0.0};  // 3 values, image has 2 channels
    pair.y = {0.0};
    trainset.pairs.push_back(pair);
    RegressorConfig cfg = config_for(RegressorKind::rfr);
    CHECK_THROWS_AS(regress_both_ways(img_x, img_y, trainset, cfg), std::invalid_argument);
}
