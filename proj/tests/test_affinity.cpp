#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hcd/affinity.hpp"
#include "oracles.hpp"

using namespace hcd;

namespace {

ImageStack random_image(int n1, int n2, int c, unsigned seed, double lo = 0.0, double hi = 1.0) {
    ImageStack img(n1, n2, c);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(lo, hi);
    for (double& v : img.data) v = uni(rng);
    return img;
}

}  // namespace

TEST_CASE("pairwise distances, 1-D values") {
    std::vector<double> vectors{0, 3, 4};  // three 1-channel vectors
    auto d = pairwise_distances(vectors, 3);
    CHECK(d[0 * 3 + 1] == doctest::Approx(3));
    CHECK(d[0 * 3 + 2] == doctest::Approx(4));
    CHECK(d[1 * 3 + 2] == doctest::Approx(1));
    for (int i = 0; i < 3; ++i) CHECK(d[i * 3 + i] == 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(d[i * 3 + j] == d[j * 3 + i]);
}

TEST_CASE("pairwise distances, identical vectors and 3-4-5") {
    std::vector<double> same{1, 1, 1, 1};
    for (double v : pairwise_distances(same, 4)) CHECK(v == 0.0);
    std::vector<double> two{0, 0, 3, 4};  // two 2-channel vectors
    CHECK(pairwise_distances(two, 2)[1] == doctest::Approx(5));
}

TEST_CASE("kernel width against a brute-force sort oracle") {
    SUBCASE("25 pixels valued 0..24") {
        std::vector<double> vals(25);
        for (int i = 0; i < 25; ++i) vals[i] = i;
        auto d = pairwise_distances(vals, 25);
        // oracle: full sort per pixel, rank-7 element
        double expected = 0.0;
        for (int i = 0; i < 25; ++i) {
            std::vector<double> others;
            for (int j = 0; j < 25; ++j)
                if (j != i) others.push_back(std::abs(double(i - j)));
            std::sort(others.begin(), others.end());
            expected += others[6];
        }
        expected /= 25.0;
        CHECK(kernel_width(d, 25) == doctest::Approx(expected).epsilon(1e-12));
        // interior pixels have 7th-NN distance 4
        std::vector<double> others;
        for (int j = 0; j < 25; ++j)
            if (j != 12) others.push_back(std::abs(12.0 - j));
        std::sort(others.begin(), others.end());
        CHECK(others[6] == 4.0);
    }
    SUBCASE("all pixels identical") {
        std::vector<double> vals(25, 5.0);
        CHECK(kernel_width(pairwise_distances(vals, 25), 25) == 0.0);
    }
    SUBCASE("9 pixels: rank falls back to k^2-1=8... clamped to 7") {
        std::vector<double> vals(9);
        for (int i = 0; i < 9; ++i) vals[i] = i;
        auto d = pairwise_distances(vals, 9);
        double expected = 0.0;
        for (int i = 0; i < 9; ++i) {
            std::vector<double> others;
            for (int j = 0; j < 9; ++j)
                if (j != i) others.push_back(std::abs(double(i - j)));
            std::sort(others.begin(), others.end());
            expected += others[6];  // rank 7 of 8 neighbours
        }
        expected /= 9.0;
        CHECK(kernel_width(d, 9) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("4 pixels: rank clamps to 3") {
        std::vector<double> vals{0, 1, 2, 3};
        auto d = pairwise_distances(vals, 4);
        double expected = (3 + 2 + 2 + 3) / 4.0;  // max distance per pixel
        CHECK(kernel_width(d, 4) == doctest::Approx(expected));
    }
}

TEST_CASE("affinity values at analytic points") {
    std::vector<double> d{0, 1, 1, 0};  // 2x2 distance matrix, d(1,2)=1
    SUBCASE("d = h") {
        auto a = affinity_from_distances(d, 2, 1.0);
        CHECK(a.at(0, 1) == doctest::Approx(std::exp(-1.0)));
        CHECK(a.at(0, 0) == 1.0);
    }
    SUBCASE("d = 2h") {
        auto a = affinity_from_distances(d, 2, 0.5);
        CHECK(a.at(0, 1) == doctest::Approx(std::exp(-4.0)));
    }
    SUBCASE("degenerate h = 0") {
        auto a = affinity_from_distances(d, 2, 0.0);
        CHECK(a.at(0, 1) == 0.0);
        CHECK(a.at(0, 0) == 1.0);
    }
    SUBCASE("negative distance rejected") {
        std::vector<double> bad{0, -1, -1, 0};
        CHECK_THROWS_AS(affinity_from_distances(bad, 2, 1.0), std::invalid_argument);
    }
}

TEST_CASE("patch norm") {
    AffinityMatrix a{2, {1, 0.5, 0.5, 1}, 1.0};
    SUBCASE("identical matrices") { CHECK(patch_norm(a, a) == 0.0); }
    SUBCASE("one symmetric off-diagonal pair differing by 0.5") {
        AffinityMatrix b{2, {1, 1.0, 1.0, 1}, 1.0};
        CHECK(patch_norm(a, b) == doctest::Approx(std::sqrt(0.5)));
    }
    SUBCASE("random 4x4 pair equals double-loop oracle") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> uni(0, 1);
        AffinityMatrix x{4, std::vector<double>(16), 1.0};
        AffinityMatrix y{4, std::vector<double>(16), 1.0};
        for (int i = 0; i < 4; ++i)
            for (int j = i; j < 4; ++j) {
                x.entries[i * 4 + j] = x.entries[j * 4 + i] = (i == j) ? 1.0 : uni(rng);
                y.entries[i * 4 + j] = y.entries[j * 4 + i] = (i == j) ? 1.0 : uni(rng);
            }
        double expected = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const double diff = x.entries[i * 4 + j] - y.entries[i * 4 + j];
                expected += diff * diff;
            }
        CHECK(patch_norm(x, y) == doctest::Approx(std::sqrt(expected)).epsilon(1e-12));
    }
    SUBCASE("dimension mismatch") {
        AffinityMatrix c{3, std::vector<double>(9, 1.0), 1.0};
        CHECK_THROWS_AS(patch_norm(a, c), std::invalid_argument);
    }
}

TEST_CASE("possibility map: identical images give all-zero raw map") {
    auto img = random_image(12, 12, 2, 11);
    auto pc = possibility_map(img, img, {5, 1}, {.normalize = false});
    for (double v : pc.values) CHECK(v == 0.0);
    // normalization of an all-zero map stays all-zero
    auto pc_norm = possibility_map(img, img, {5, 1});
    for (double v : pc_norm.values) CHECK(v == 0.0);
}

TEST_CASE("possibility map matches the naive direct-loop oracle") {
    for (unsigned seed = 0; seed < 3; ++seed) {
        auto x = random_image(16, 16, 2, 100 + seed);
        auto y = random_image(16, 16, 3, 200 + seed);
        auto pc = possibility_map(x, y, {5, 1});
        auto ref = oracle::naive_possibility_map(x, y, 5);
        for (std::size_t i = 0; i < pc.size(); ++i)
            CHECK(pc.values[i] == doctest::Approx(ref[i]).epsilon(1e-9));
    }
}

TEST_CASE("possibility map with stride matches naive accumulation rule") {
    // delta > 1 assigns f to all covered pixels of the strided grid
    auto x = random_image(14, 14, 2, 5);
    auto y = random_image(14, 14, 2, 6);
    PatchSpec spec{5, 3};
    auto pc = possibility_map(x, y, spec, {.normalize = false});
    auto records = patch_norms(x, y, spec);
    std::vector<double> sums(pc.size(), 0.0);
    std::vector<int> counts(pc.size(), 0);
    for (const auto& rec : records)
        for (int i = 0; i < spec.k; ++i)
            for (int j = 0; j < spec.k; ++j) {
                sums[std::size_t(rec.anchor.row + i) * 14 + rec.anchor.col + j] += rec.norm;
                counts[std::size_t(rec.anchor.row + i) * 14 + rec.anchor.col + j] += 1;
            }
    for (std::size_t i = 0; i < pc.size(); ++i) {
        REQUIRE(counts[i] >= 1);
        CHECK(pc.values[i] == doctest::Approx(sums[i] / counts[i]).epsilon(1e-12));
    }
}

TEST_CASE("scale invariance: both images scaled by the same positive factor") {
    auto x = random_image(12, 12, 2, 21);
    auto y = random_image(12, 12, 2, 22);
    auto base = possibility_map(x, y, {4, 1}, {.normalize = false});
    ImageStack xs = x, ys = y;
    const double c = 3.7;
    for (double& v : xs.data) v *= c;
    for (double& v : ys.data) v *= c;
    auto scaled = possibility_map(xs, ys, {4, 1}, {.normalize = false});
    for (std::size_t i = 0; i < base.size(); ++i)
        CHECK(scaled.values[i] == doctest::Approx(base.values[i]).epsilon(1e-12));
}

TEST_CASE("permutation consistency of the patch norm") {
    // relabeling patch pixels identically in both modalities leaves f unchanged
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> uni(0, 1);
    const int dim = 9;
    std::vector<double> vx(dim * 2), vy(dim * 3);
    for (double& v : vx) v = uni(rng);
    for (double& v : vy) v = uni(rng);

    auto norm_of = [&](const std::vector<double>& a, const std::vector<double>& b) {
        auto da = pairwise_distances(a, dim);
        auto db = pairwise_distances(b, dim);
        return patch_norm(affinity_from_distances(da, dim, kernel_width(da, dim)),
                          affinity_from_distances(db, dim, kernel_width(db, dim)));
    };
    const double f0 = norm_of(vx, vy);

    std::vector<int> perm(dim);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> px(dim * 2), py(dim * 3);
    for (int i = 0; i < dim; ++i) {
        for (int c = 0; c < 2; ++c) px[i * 2 + c] = vx[perm[i] * 2 + c];
        for (int c = 0; c < 3; ++c) py[i * 3 + c] = vy[perm[i] * 3 + c];
    }
    CHECK(norm_of(px, py) == doctest::Approx(f0).epsilon(1e-12));
}

TEST_CASE("possibility map rejects mismatched image pairs") {
    auto x = random_image(10, 10, 2, 1);
    auto y = random_image(11, 10, 2, 2);
    CHECK_THROWS_AS(possibility_map(x, y, {5, 1}), std::invalid_argument);
}
