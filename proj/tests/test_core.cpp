#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "hcd/image.hpp"

using namespace hcd;

TEST_CASE("patch anchors, stride 1") {
    auto anchors = patch_anchors(6, 6, {5, 1});
    REQUIRE(anchors.size() == 4);
    CHECK(anchors[0].row == 0);
    CHECK(anchors[0].col == 0);
    CHECK(anchors[1].col == 1);
    CHECK(anchors[2].row == 1);
    CHECK(anchors[3].row == 1);
    CHECK(anchors[3].col == 1);
}

TEST_CASE("patch anchors, exact fit") {
    auto anchors = patch_anchors(5, 5, {5, 1});
    REQUIRE(anchors.size() == 1);
    CHECK(anchors[0].row == 0);
    CHECK(anchors[0].col == 0);
}

TEST_CASE("patch anchors, clamped stride") {
    // rows/cols {0,4} from the stride plus the clamped border anchor 5
    auto anchors = patch_anchors(10, 10, {5, 4});
    REQUIRE(anchors.size() == 9);
    std::vector<int> rows, cols;
    for (auto a : anchors) {
        rows.push_back(a.row);
        cols.push_back(a.col);
    }
    CHECK(rows == std::vector<int>{0, 0, 0, 4, 4, 4, 5, 5, 5});
    CHECK(cols == std::vector<int>{0, 4, 5, 0, 4, 5, 0, 4, 5});
}

TEST_CASE("patch larger than image") {
    CHECK_THROWS_WITH_AS(patch_anchors(4, 4, {5, 1}), "patch larger than image",
                         std::invalid_argument);
}

TEST_CASE("stride beyond the patch side is rejected") {
    CHECK_THROWS_AS(patch_anchors(10, 10, {3, 4}), std::invalid_argument);
}

TEST_CASE("anchor coverage: every pixel covered for any valid spec") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const int n1 = 5 + int(rng() % 30), n2 = 5 + int(rng() % 30);
        const int k = 2 + int(rng() % (std::min(n1, n2) - 1));
        const int delta = 1 + int(rng() % k);
        std::vector<int> covered(std::size_t(n1) * n2, 0);
        for (auto a : patch_anchors(n1, n2, {k, delta}))
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) covered[std::size_t(a.row + i) * n2 + a.col + j] = 1;
        for (int c : covered) CHECK(c == 1);
    }
}

TEST_CASE("patch vector extraction") {
    ImageStack img(3, 3, 1);
    for (int i = 0; i < 9; ++i) img.data[i] = i + 1;

    SUBCASE("k=2 at origin") {
        auto v = extract_patch_vectors(img, {0, 0}, 2);
        CHECK(v == std::vector<double>{1, 2, 4, 5});
    }
    SUBCASE("k=1 equals the pixel's channel vector") {
        ImageStack two(3, 3, 2);
        two.at(1, 2, 0) = 42;
        two.at(1, 2, 1) = 43;
        auto v = extract_patch_vectors(two, {1, 2}, 1);
        CHECK(v == std::vector<double>{42, 43});
    }
    SUBCASE("overlapping anchors share pixel vectors") {
        auto a = extract_patch_vectors(img, {0, 0}, 2);
        auto b = extract_patch_vectors(img, {0, 1}, 2);
        CHECK(a[1] == b[0]);  // pixel (0,1)
        CHECK(a[3] == b[2]);  // pixel (1,1)
    }
    SUBCASE("out of bounds anchor") {
        CHECK_THROWS_AS(extract_patch_vectors(img, {2, 2}, 2), std::out_of_range);
    }
    SUBCASE("extraction is deterministic") {
        CHECK(extract_patch_vectors(img, {0, 0}, 2) == extract_patch_vectors(img, {0, 0}, 2));
    }
}

TEST_CASE("image stack validation") {
    ImageStack img(2, 2, 1);
    img.validate();
    img.data[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(img.validate(), std::invalid_argument);
    img.data[0] = 0.0;
    img.data.pop_back();
    CHECK_THROWS_AS(img.validate(), std::invalid_argument);
}

TEST_CASE("min-max normalization") {
    std::vector<double> v{2, 4, 6};
    min_max_normalize(v);
    CHECK(v == std::vector<double>{0.0, 0.5, 1.0});
    std::vector<double> constant{3, 3, 3};
    min_max_normalize(constant);
    CHECK(constant == std::vector<double>{0, 0, 0});
}
