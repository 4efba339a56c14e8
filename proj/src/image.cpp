#include "hcd/image.hpp"

#include <algorithm>
#include <cmath>

namespace hcd {

ImageStack::ImageStack(int n1, int n2, int c, std::string tag)
    : height(n1), width(n2), channels(c),
      data(std::size_t(n1) * n2 * c, 0.0), modality_tag(std::move(tag)) {
    if (n1 <= 0 || n2 <= 0 || c <= 0)
        throw std::invalid_argument("ImageStack: dimensions must be positive");
}

void ImageStack::validate() const {
    if (data.size() != std::size_t(height) * width * channels)
        throw std::invalid_argument("ImageStack: data length != n1*n2*C");
    for (double v : data)
        if (!std::isfinite(v))
            throw std::invalid_argument("ImageStack: non-finite value");
}

void PatchSpec::validate_for(int n1, int n2) const {
    if (k < 2)
        throw std::invalid_argument("PatchSpec: k must be >= 2");
    if (delta < 1)
        throw std::invalid_argument("PatchSpec: delta must be >= 1");
    // A stride beyond k would leave pixels uncovered, breaking the per-pixel mean.
    if (delta > k)
        throw std::invalid_argument("PatchSpec: delta must be <= k");
    if (k > std::min(n1, n2))
        throw std::invalid_argument("patch larger than image");
}

namespace {

// Strided anchor positions along one axis, final anchor clamped to the border.
std::vector<int> axis_anchors(int extent, int k, int delta) {
    std::vector<int> out;
    const int last = extent - k;
    for (int a = 0; a <= last; a += delta) out.push_back(a);
    if (out.back() != last) out.push_back(last);
    return out;
}

}  // namespace

std::vector<Anchor> patch_anchors(int n1, int n2, const PatchSpec& spec) {
    spec.validate_for(n1, n2);
    const auto rows = axis_anchors(n1, spec.k, spec.delta);
    const auto cols = axis_anchors(n2, spec.k, spec.delta);
    std::vector<Anchor> anchors;
    anchors.reserve(rows.size() * cols.size());
    for (int r : rows)
        for (int c : cols) anchors.push_back({r, c});
    return anchors;
}

std::vector<double> extract_patch_vectors(const ImageStack& image, Anchor anchor, int k) {
    if (anchor.row < 0 || anchor.col < 0 ||
        anchor.row + k > image.height || anchor.col + k > image.width)
        throw std::out_of_range("extract_patch_vectors: anchor out of bounds");
    const int c = image.channels;
    std::vector<double> out(std::size_t(k) * k * c);
    double* dst = out.data();
    for (int i = 0; i < k; ++i) {
        const double* src = &image.data[(std::size_t(anchor.row + i) * image.width + anchor.col) * c];
        std::copy(src, src + std::size_t(k) * c, dst);
        dst += std::size_t(k) * c;
    }
    return out;
}

void min_max_normalize(std::vector<double>& v) {
    if (v.empty()) return;
    auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi <= lo) {
        std::fill(v.begin(), v.end(), 0.0);
        return;
    }
    const double scale = 1.0 / (hi - lo);
    for (double& x : v) x = (x - lo) * scale;
}

}  // namespace hcd
