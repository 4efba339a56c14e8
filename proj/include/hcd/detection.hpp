#pragma once

#include <optional>
#include <vector>

#include "hcd/image.hpp"
#include "hcd/regression.hpp"

namespace hcd {

struct FilterConfig {
    int iterations = 5;
    double kernel_width = 0.1;   // Gaussian width in normalized feature space
    int spatial_radius = 8;      // truncation window, pixels
    double spatial_sigma = 4.0;  // pixels
    bool periodic = false;       // wrap-around boundaries instead of renormalizing
};

struct MetricsReport {
    std::optional<double> auc;  // absent when the mask holds one class only
    double oa = 0.0;
    std::optional<double> kappa;  // absent when p_e = 1
    ConfusionCounts confusion;
    double threshold_used = 0.0;
};

struct ThresholdResult {
    double threshold = 0.0;
    std::vector<std::uint8_t> change_map;  // 1 = change
    bool degenerate = false;               // constant input, threshold undefined
};

/// Per-pixel Euclidean norm across channels of (original - predicted).
ChangeScores distance_image(const ImageStack& original, const PredictedImage& predicted);

/// Clips values above mean + num_sigma * stddev, then min-max scales to [0,1].
ChangeScores clip_normalize(const ChangeScores& d, double num_sigma = 4.0);

/// Element-wise average of two normalized distance maps.
ChangeScores fuse(const ChangeScores& dx, const ChangeScores& dy);

/// Iterative mean-field smoothing with a truncated Gaussian kernel over the
/// spatial offset and the guide images' normalized channel features.
ChangeScores meanfield_filter(const ChangeScores& d, const ImageStack& guide_x,
                              const ImageStack& guide_y, const FilterConfig& config);

/// Otsu's histogram threshold over [0,1]; ties resolved to the lowest
/// threshold; strictly-greater values are labelled change.
ThresholdResult otsu_threshold(const ChangeScores& d, int num_bins = 256);

/// AUC by rank statistic (ties count one half) plus OA / Cohen's kappa from
/// the binary map. `scores` may be null when only the map is evaluated.
MetricsReport score(const std::vector<std::uint8_t>& binary_map,
                    const ChangeScores* scores,
                    const std::vector<std::uint8_t>& ground_truth,
                    double threshold_used = 0.0);

/// AUC alone, for continuous-map evaluation.
std::optional<double> auc_rank(const std::vector<double>& values,
                               const std::vector<std::uint8_t>& labels);

}  // namespace hcd
