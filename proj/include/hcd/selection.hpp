#pragma once

#include <optional>
#include <vector>

#include "hcd/image.hpp"

namespace hcd {

/// Per-channel normalized histogram with shared bin edges.
struct Histogram {
    std::vector<double> mass;   // N_bins entries summing to 1
    std::vector<double> edges;  // N_bins + 1 strictly increasing edges
};

struct SelectionReport {
    TrainingSet training_set;
    double d_h_x = 0.0;
    double d_h_y = 0.0;
    // Fraction of selected pixels inside a ground-truth change mask, when a
    // mask is supplied for evaluation. Never consumed by the pipeline.
    std::optional<double> fn_fraction;
};

/// Picks the M pixels with the lowest possibility scores; ties at the cutoff
/// are broken by ascending pixel index.
TrainingSet select_training(const ChangeScores& scores, const ImageStack& img_x,
                            const ImageStack& img_y, std::size_t m);

/// Hellinger distance between two normalized histograms over the same bins.
double hellinger(const Histogram& ha, const Histogram& hb);

/// Builds the N_bins histogram of one image channel over the given pixel
/// subset (empty subset list = whole image), with bin edges spanning the
/// FULL image's per-channel min/max.
Histogram channel_histogram(const ImageStack& image, int channel, int n_bins,
                            const std::vector<std::size_t>* subset = nullptr);

/// Multi-channel Hellinger distance between the whole image and the subset:
/// d_H = sqrt(1 - (1/C) * sum_j BC_j), averaging Bhattacharyya coefficients
/// over the channels.
double hellinger_multichannel(const ImageStack& image, const std::vector<std::size_t>& subset,
                              int n_bins);

/// select_training plus both Hellinger diagnostics (and the FN fraction when
/// an evaluation mask is available).
SelectionReport select_with_diagnostics(const ChangeScores& scores, const ImageStack& img_x,
                                        const ImageStack& img_y, std::size_t m, int n_bins,
                                        const std::vector<std::uint8_t>* change_mask = nullptr);

}  // namespace hcd
