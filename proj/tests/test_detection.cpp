#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hcd/detection.hpp"
#include "oracles.hpp"

using namespace hcd;

namespace {

ChangeScores scores_from(std::initializer_list<double> vals, int h, int w) {
    ChangeScores d(h, w, ScoreKind::distance);
    std::copy(vals.begin(), vals.end(), d.values.begin());
    return d;
}

ChangeScores random_scores(int h, int w, unsigned seed) {
    ChangeScores d(h, w, ScoreKind::distance);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(0, 1);
    for (double& v : d.values) v = uni(rng);
    return d;
}

ImageStack random_image(int h, int w, int c, unsigned seed) {
    ImageStack img(h, w, c);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(0, 1);
    for (double& v : img.data) v = uni(rng);
    return img;
}

PredictedImage as_prediction(ImageStack img) {
    return {std::move(img), RegressorKind::rfr, "x_to_y"};
}

}  // namespace

TEST_CASE("distance image examples") {
    SUBCASE("identical images give zero") {
        auto img = random_image(4, 4, 3, 1);
        auto d = distance_image(img, as_prediction(img));
        for (double v : d.values) CHECK(v == 0.0);
    }
    SUBCASE("single-channel difference is the absolute difference") {
        ImageStack a(1, 2, 1), b(1, 2, 1);
        a.data = {1.0, 5.0};
        b.data = {4.0, 5.0};
        auto d = distance_image(a, as_prediction(b));
        CHECK(d.values[0] == doctest::Approx(3.0));
        CHECK(d.values[1] == doctest::Approx(0.0));
    }
    SUBCASE("3-4-5 across two channels") {
        ImageStack a(1, 1, 2), b(1, 1, 2);
        a.data = {3.0, 4.0};
        b.data = {0.0, 0.0};
        CHECK(distance_image(a, as_prediction(b)).values[0] == doctest::Approx(5.0));
    }
    SUBCASE("shape mismatch throws") {
        CHECK_THROWS_AS(distance_image(random_image(4, 4, 2, 2),
                                       as_prediction(random_image(4, 5, 2, 3))),
                        std::invalid_argument);
    }
}

TEST_CASE("clip_normalize caps outliers then rescales to [0,1]") {
    // 99 ones and one huge outlier: mean ~ 1+, sigma small, so the outlier is
    // clipped and the map separates cleanly
    ChangeScores d(10, 10, ScoreKind::distance);
    std::fill(d.values.begin(), d.values.end(), 1.0);
    d.values[37] = 1000.0;
    auto out = clip_normalize(d, 4.0);
    CHECK(out.values[37] == doctest::Approx(1.0));
    CHECK(out.values[0] == doctest::Approx(0.0));

    SUBCASE("matches direct recomputation on random maps") {
        for (unsigned seed : {5u, 6u, 7u}) {
            auto m = random_scores(8, 9, seed);
            m.values[3] = 50.0;
            auto got = clip_normalize(m, 2.0);
            const double n = double(m.values.size());
            double mean = 0.0;
            for (double v : m.values) mean += v;
            mean /= n;
            double var = 0.0;
            for (double v : m.values) var += (v - mean) * (v - mean);
            const double cap = mean + 2.0 * std::sqrt(var / n);
            std::vector<double> ref = m.values;
            for (double& v : ref) v = std::min(v, cap);
            const auto [lo_it, hi_it] = std::minmax_element(ref.begin(), ref.end());
            const double lo = *lo_it, hi = *hi_it;
            for (double& v : ref) v = (v - lo) / (hi - lo);
            for (std::size_t i = 0; i < ref.size(); ++i)
                CHECK(got.values[i] == doctest::Approx(ref[i]).epsilon(1e-12));
        }
    }
    SUBCASE("constant map becomes all-zero") {
        ChangeScores flat(3, 3, ScoreKind::distance);
        std::fill(flat.values.begin(), flat.values.end(), 2.5);
        auto out2 = clip_normalize(flat);
        for (double v : out2.values) CHECK(v == 0.0);
    }
}

TEST_CASE("fuse averages element-wise") {
    auto a = scores_from({0.0, 1.0, 0.5, 0.2}, 2, 2);
    auto b = scores_from({1.0, 1.0, 0.1, 0.0}, 2, 2);
    auto f = fuse(a, b);
    CHECK(f.values[0] == doctest::Approx(0.5));
    CHECK(f.values[1] == doctest::Approx(1.0));
    CHECK(f.values[2] == doctest::Approx(0.3));
    CHECK(f.values[3] == doctest::Approx(0.1));
    CHECK_THROWS_AS(fuse(a, random_scores(3, 2, 1)), std::invalid_argument);
}

TEST_CASE("mean-field filter basics") {
    const auto gx = random_image(12, 14, 2, 11);
    const auto gy = random_image(12, 14, 1, 12);

    SUBCASE("zero iterations is the identity") {
        auto d = random_scores(12, 14, 13);
        FilterConfig cfg;
        cfg.iterations = 0;
        cfg.spatial_radius = 3;
        auto out = meanfield_filter(d, gx, gy, cfg);
        CHECK(out.values == d.values);
        CHECK(out.kind == ScoreKind::filtered);
    }
    SUBCASE("constant maps are fixed points") {
        ChangeScores d(12, 14, ScoreKind::distance);
        std::fill(d.values.begin(), d.values.end(), 0.7);
        FilterConfig cfg;
        cfg.spatial_radius = 3;
        auto out = meanfield_filter(d, gx, gy, cfg);
        for (double v : out.values) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));
    }
    SUBCASE("one iteration matches a direct double-loop oracle") {
        auto d = random_scores(12, 14, 17);
        FilterConfig cfg;
        cfg.iterations = 1;
        cfg.spatial_radius = 2;
        cfg.spatial_sigma = 1.5;
        cfg.kernel_width = 0.25;
        auto out = meanfield_filter(d, gx, gy, cfg);

        // independently normalized guide features
        const int dim = 3;
        std::vector<double> feats(d.size() * dim);
        for (int c = 0; c < 3; ++c) {
            const ImageStack& g = c < 2 ? gx : gy;
            const int gc = c < 2 ? c : 0;
            std::vector<double> col(d.size());
            for (std::size_t i = 0; i < d.size(); ++i) col[i] = g.pixel(i)[gc];
            const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
            for (std::size_t i = 0; i < d.size(); ++i)
                feats[i * dim + c] = (col[i] - *lo) / (*hi - *lo);
        }
        for (int r = 0; r < 12; ++r)
            for (int c = 0; c < 14; ++c) {
                double wsum = 0.0, acc = 0.0;
                for (int rr = std::max(0, r - 2); rr <= std::min(11, r + 2); ++rr)
                    for (int cc = std::max(0, c - 2); cc <= std::min(13, c + 2); ++cc) {
                        double fd2 = 0.0;
                        for (int f = 0; f < dim; ++f) {
                            const double diff = feats[(std::size_t(r) * 14 + c) * dim + f] -
                                                feats[(std::size_t(rr) * 14 + cc) * dim + f];
                            fd2 += diff * diff;
                        }
                        const double weight =
                            std::exp(-0.5 * ((r - rr) * (r - rr) + (c - cc) * (c - cc)) /
                                     (1.5 * 1.5)) *
                            std::exp(-0.5 * fd2 / (0.25 * 0.25));
                        wsum += weight;
                        acc += weight * d.values[std::size_t(rr) * 14 + cc];
                    }
                CHECK(out.values[std::size_t(r) * 14 + c] ==
                      doctest::Approx(acc / wsum).epsilon(1e-9));
            }
    }
    SUBCASE("periodic mode wraps indices") {
        // uniform guides make all feature weights equal; with periodic wrap the
        // kernel sees the same neighborhood everywhere, so a constant map stays
        // constant and a single impulse spreads identically at all offsets
        ImageStack flat_x(8, 8, 1), flat_y(8, 8, 1);
        std::fill(flat_x.data.begin(), flat_x.data.end(), 0.0);
        std::fill(flat_y.data.begin(), flat_y.data.end(), 0.0);
        ChangeScores d(8, 8, ScoreKind::distance);
        d.values[0] = 1.0;
        FilterConfig cfg;
        cfg.iterations = 1;
        cfg.spatial_radius = 2;
        cfg.periodic = true;
        auto out = meanfield_filter(d, flat_x, flat_y, cfg);
        // the response at (0,1) and at (0,7) are mirror offsets of the impulse
        CHECK(out.values[1] == doctest::Approx(out.values[7]).epsilon(1e-12));
        CHECK(out.values[8] == doctest::Approx(out.values[7 * 8]).epsilon(1e-12));
        // total mass is preserved when every pixel sees a full uniform kernel
        double before = 0.0, after = 0.0;
        for (double v : d.values) before += v;
        for (double v : out.values) after += v;
        CHECK(after == doctest::Approx(before).epsilon(1e-9));
    }
    SUBCASE("radius must fit inside the image") {
        FilterConfig cfg;
        cfg.spatial_radius = 20;
        CHECK_THROWS_AS(meanfield_filter(random_scores(12, 14, 1), gx, gy, cfg),
                        std::invalid_argument);
    }
}

TEST_CASE("Otsu threshold") {
    SUBCASE("bimodal map splits between the modes") {
        ChangeScores d(10, 10, ScoreKind::distance);
        for (std::size_t i = 0; i < d.size(); ++i) d.values[i] = i < 70 ? 0.1 : 0.9;
        auto res = otsu_threshold(d);
        CHECK_FALSE(res.degenerate);
        CHECK(res.threshold > 0.1);
        CHECK(res.threshold < 0.9);
        std::size_t changed = 0;
        for (auto v : res.change_map) changed += v;
        CHECK(changed == 30);
    }
    SUBCASE("constant map is degenerate with an all-zero change map") {
        ChangeScores d(5, 5, ScoreKind::distance);
        std::fill(d.values.begin(), d.values.end(), 0.4);
        auto res = otsu_threshold(d);
        CHECK(res.degenerate);
        for (auto v : res.change_map) CHECK(v == 0);
    }
    SUBCASE("matches the exhaustive oracle on random maps") {
        for (unsigned seed = 0; seed < 10; ++seed) {
            auto d = random_scores(16, 16, 100 + seed);
            min_max_normalize(d.values);
            auto res = otsu_threshold(d, 64);
            CHECK(res.threshold == doctest::Approx(oracle::otsu_exhaustive(d.values, 64))
                                       .epsilon(1e-12));
        }
    }
}

TEST_CASE("AUC") {
    SUBCASE("perfect separation gives 1, inverted gives 0") {
        std::vector<double> v{0.1, 0.2, 0.8, 0.9};
        std::vector<std::uint8_t> l{0, 0, 1, 1};
        CHECK(*auc_rank(v, l) == doctest::Approx(1.0));
        std::vector<std::uint8_t> inv{1, 1, 0, 0};
        CHECK(*auc_rank(v, inv) == doctest::Approx(0.0));
    }
    SUBCASE("hand-computed 0.75") {
        // pairs: (0.3 vs 0.2) win, (0.3 vs 0.4) loss, (0.5 vs 0.2) win, (0.5 vs 0.4) win
        std::vector<double> v{0.2, 0.3, 0.4, 0.5};
        std::vector<std::uint8_t> l{0, 1, 0, 1};
        CHECK(*auc_rank(v, l) == doctest::Approx(0.75));
    }
    SUBCASE("ties count one half") {
        std::vector<double> v{0.5, 0.5};
        std::vector<std::uint8_t> l{0, 1};
        CHECK(*auc_rank(v, l) == doctest::Approx(0.5));
    }
    SUBCASE("single-class labels give no AUC") {
        std::vector<double> v{0.1, 0.2};
        CHECK_FALSE(auc_rank(v, {1, 1}).has_value());
        CHECK_FALSE(auc_rank(v, {0, 0}).has_value());
    }
    SUBCASE("rank statistic matches trapezoidal ROC integration") {
        std::mt19937 rng(7);
        std::uniform_real_distribution<double> uni(0, 1);
        std::bernoulli_distribution coin(0.4);
        for (int trial = 0; trial < 100; ++trial) {
            const int n = 30 + trial;
            std::vector<double> v(n);
            std::vector<std::uint8_t> l(n);
            bool both = false;
            for (int i = 0; i < n; ++i) {
                // quantize some values to force ties
                v[i] = trial % 2 ? std::round(uni(rng) * 8) / 8.0 : uni(rng);
                l[i] = coin(rng) ? 1 : 0;
            }
            std::size_t pos = 0;
            for (auto b : l) pos += b;
            if (pos == 0 || pos == l.size()) continue;
            both = true;
            CHECK(*auc_rank(v, l) == doctest::Approx(oracle::auc_trapezoid(v, l)).epsilon(1e-12));
            (void)both;
        }
    }
    SUBCASE("invariant under monotone transforms") {
        std::mt19937 rng(9);
        std::uniform_real_distribution<double> uni(0, 1);
        std::vector<double> v(50);
        std::vector<std::uint8_t> l(50);
        for (int i = 0; i < 50; ++i) {
            v[i] = uni(rng);
            l[i] = uni(rng) < 0.3 ? 1 : 0;
        }
        l[0] = 1;
        l[1] = 0;
        std::vector<double> w = v;
        for (double& x : w) x = std::exp(3.0 * x) - 1.0;
        CHECK(*auc_rank(v, l) == doctest::Approx(*auc_rank(w, l)).epsilon(1e-12));
    }
}

TEST_CASE("overall accuracy and Cohen's kappa") {
    SUBCASE("hand case: tp=40 tn=40 fp=10 fn=10 gives OA 0.8, kappa 0.6") {
        std::vector<std::uint8_t> pred, truth;
        auto push = [&](int n, int p, int t) {
            for (int i = 0; i < n; ++i) {
                pred.push_back(std::uint8_t(p));
                truth.push_back(std::uint8_t(t));
            }
        };
        push(40, 1, 1);
        push(40, 0, 0);
        push(10, 1, 0);
        push(10, 0, 1);
        auto report = score(pred, nullptr, truth, 0.5);
        CHECK(report.oa == doctest::Approx(0.8));
        CHECK(*report.kappa == doctest::Approx(0.6));
        CHECK(report.confusion.tp == 40);
        CHECK(report.confusion.tn == 40);
        CHECK(report.confusion.fp == 10);
        CHECK(report.confusion.fn == 10);
        CHECK(report.threshold_used == 0.5);
    }
    SUBCASE("asymmetric hand case") {
        // tp=10 tn=70 fp=0 fn=20: OA=0.8, pe=(0.1*0.3 + 0.9*0.7)=0.66, kappa=0.14/0.34
        std::vector<std::uint8_t> pred, truth;
        for (int i = 0; i < 100; ++i) {
            pred.push_back(i < 10 ? 1 : 0);
            truth.push_back(i < 30 ? 1 : 0);
        }
        auto report = score(pred, nullptr, truth);
        CHECK(report.oa == doctest::Approx(0.8));
        CHECK(*report.kappa == doctest::Approx((0.8 - 0.66) / (1.0 - 0.66)).epsilon(1e-12));
    }
    SUBCASE("kappa is absent when chance agreement is total") {
        std::vector<std::uint8_t> pred{1, 1, 1}, truth{1, 1, 1};
        auto report = score(pred, nullptr, truth);
        CHECK(report.oa == doctest::Approx(1.0));
        CHECK_FALSE(report.kappa.has_value());
    }
    SUBCASE("random predictions have near-zero kappa") {
        std::mt19937 rng(31);
        std::bernoulli_distribution coin(0.5);
        double acc = 0.0;
        const int trials = 50;
        for (int t = 0; t < trials; ++t) {
            std::vector<std::uint8_t> pred(4000), truth(4000);
            for (int i = 0; i < 4000; ++i) {
                pred[i] = coin(rng) ? 1 : 0;
                truth[i] = coin(rng) ? 1 : 0;
            }
            acc += std::abs(*score(pred, nullptr, truth).kappa);
        }
        CHECK(acc / trials < 0.05);
    }
    SUBCASE("AUC is attached when scores are provided") {
        ChangeScores d(1, 4, ScoreKind::distance);
        d.values = {0.1, 0.2, 0.8, 0.9};
        std::vector<std::uint8_t> pred{0, 0, 1, 1}, truth{0, 0, 1, 1};
        auto report = score(pred, &d, truth);
        CHECK(*report.auc == doctest::Approx(1.0));
    }
}
