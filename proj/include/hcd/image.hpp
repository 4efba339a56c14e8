#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hcd {

/// H x W x C raster for one modality. Values are stored row-major by pixel,
/// channel-interleaved, always as 64-bit floats internally.
struct ImageStack {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;
    std::string modality_tag;

    ImageStack() = default;
    ImageStack(int n1, int n2, int c, std::string tag = {});

    std::size_t num_pixels() const { return std::size_t(height) * width; }

    double& at(int row, int col, int ch) {
        return data[(std::size_t(row) * width + col) * channels + ch];
    }
    double at(int row, int col, int ch) const {
        return data[(std::size_t(row) * width + col) * channels + ch];
    }
    const double* pixel(std::size_t n) const { return data.data() + n * channels; }

    /// Throws if the dimensions and the buffer disagree or any value is non-finite.
    void validate() const;
};

/// Sliding-window geometry: side length k and stride delta.
struct PatchSpec {
    int k = 5;
    int delta = 1;

    void validate_for(int n1, int n2) const;
};

enum class ScoreKind { possibility, distance, filtered };

/// H x W map of per-pixel scores (change possibility, fused distance, ...).
struct ChangeScores {
    int height = 0;
    int width = 0;
    std::vector<double> values;
    ScoreKind kind = ScoreKind::possibility;

    ChangeScores() = default;
    ChangeScores(int n1, int n2, ScoreKind k)
        : height(n1), width(n2), values(std::size_t(n1) * n2, 0.0), kind(k) {}

    std::size_t size() const { return values.size(); }
};

/// One pseudo-training sample: co-located feature vectors in both modalities.
struct TrainingPair {
    std::size_t pixel = 0;
    std::vector<double> x;  // length P
    std::vector<double> y;  // length Q
};

struct TrainingSet {
    std::vector<TrainingPair> pairs;

    std::size_t size() const { return pairs.size(); }
    int dim_x() const { return pairs.empty() ? 0 : int(pairs.front().x.size()); }
    int dim_y() const { return pairs.empty() ? 0 : int(pairs.front().y.size()); }
};

struct ConfusionCounts {
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
    std::uint64_t total() const { return tp + tn + fp + fn; }
};

struct Anchor {
    int row = 0;
    int col = 0;
};

/// Enumerates the delta-strided patch grid in row-major order. The last
/// row/column anchor is clamped to the border so every pixel is covered.
std::vector<Anchor> patch_anchors(int n1, int n2, const PatchSpec& spec);

/// Returns the k^2 per-pixel channel vectors of the patch at `anchor`,
/// in row-major patch order, flattened into a k^2 x C row-major buffer.
std::vector<double> extract_patch_vectors(const ImageStack& image, Anchor anchor, int k);

/// Min-max scales `v` into [0,1] in place; a constant map becomes all-zero.
void min_max_normalize(std::vector<double>& v);

}  // namespace hcd
