#include "hcd/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hcd {

TrainingSet select_training(const ChangeScores& scores, const ImageStack& img_x,
                            const ImageStack& img_y, std::size_t m) {
    if (scores.kind != ScoreKind::possibility)
        throw std::invalid_argument("select_training: scores must be a possibility map");
    if (img_x.height != scores.height || img_x.width != scores.width ||
        img_y.height != scores.height || img_y.width != scores.width)
        throw std::invalid_argument("select_training: dimension mismatch");
    const std::size_t n = scores.size();
    if (m < 1 || m > n)
        throw std::invalid_argument("training size exceeds pixel count");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t(0));
    // (value, index) ordering; iota already supplies the index tie-break.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores.values[a] < scores.values[b];
    });
    order.resize(m);
    std::sort(order.begin(), order.end());

    TrainingSet ts;
    ts.pairs.reserve(m);
    for (std::size_t pix : order) {
        TrainingPair pair;
        pair.pixel = pix;
        pair.x.assign(img_x.pixel(pix), img_x.pixel(pix) + img_x.channels);
        pair.y.assign(img_y.pixel(pix), img_y.pixel(pix) + img_y.channels);
        ts.pairs.push_back(std::move(pair));
    }
    return ts;
}

double hellinger(const Histogram& ha, const Histogram& hb) {
    if (ha.mass.size() != hb.mass.size() || ha.edges != hb.edges)
        throw std::invalid_argument("hellinger: histograms must share bins");
    auto check_normalized = [](const Histogram& h) {
        const double s = std::accumulate(h.mass.begin(), h.mass.end(), 0.0);
        if (std::abs(s - 1.0) > 1e-9)
            throw std::invalid_argument("hellinger: histogram not normalized");
    };
    check_normalized(ha);
    check_normalized(hb);
    double bc = 0.0;
    for (std::size_t i = 0; i < ha.mass.size(); ++i)
        bc += std::sqrt(ha.mass[i] * hb.mass[i]);
    return std::sqrt(std::max(0.0, 1.0 - bc));
}

Histogram channel_histogram(const ImageStack& image, int channel, int n_bins,
                            const std::vector<std::size_t>* subset) {
    if (n_bins < 2) throw std::invalid_argument("channel_histogram: n_bins < 2");
    if (channel < 0 || channel >= image.channels)
        throw std::invalid_argument("channel_histogram: bad channel");

    // Edges always come from the full image so subset histograms stay comparable.
    double lo = image.at(0, 0, channel), hi = lo;
    for (std::size_t n = 0; n < image.num_pixels(); ++n) {
        const double v = image.pixel(n)[channel];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) hi = lo + 1.0;  // constant channel: one bin catches everything

    Histogram h;
    h.edges.resize(n_bins + 1);
    for (int b = 0; b <= n_bins; ++b)
        h.edges[b] = lo + (hi - lo) * b / n_bins;
    h.mass.assign(n_bins, 0.0);

    auto add = [&](std::size_t pix) {
        const double v = image.pixel(pix)[channel];
        int b = int((v - lo) / (hi - lo) * n_bins);
        b = std::clamp(b, 0, n_bins - 1);
        h.mass[b] += 1.0;
    };
    std::size_t count;
    if (subset) {
        if (subset->empty()) throw std::invalid_argument("channel_histogram: empty subset");
        for (std::size_t pix : *subset) add(pix);
        count = subset->size();
    } else {
        for (std::size_t n = 0; n < image.num_pixels(); ++n) add(n);
        count = image.num_pixels();
    }
    for (double& mss : h.mass) mss /= double(count);
    return h;
}

double hellinger_multichannel(const ImageStack& image, const std::vector<std::size_t>& subset,
                              int n_bins) {
    if (subset.empty())
        throw std::invalid_argument("hellinger_multichannel: empty subset");
    double bc_sum = 0.0;
    for (int ch = 0; ch < image.channels; ++ch) {
        const Histogram full = channel_histogram(image, ch, n_bins);
        const Histogram sub = channel_histogram(image, ch, n_bins, &subset);
        for (int b = 0; b < n_bins; ++b)
            bc_sum += std::sqrt(full.mass[b] * sub.mass[b]);
    }
    return std::sqrt(std::max(0.0, 1.0 - bc_sum / image.channels));
}

SelectionReport select_with_diagnostics(const ChangeScores& scores, const ImageStack& img_x,
                                        const ImageStack& img_y, std::size_t m, int n_bins,
                                        const std::vector<std::uint8_t>* change_mask) {
    SelectionReport report;
    report.training_set = select_training(scores, img_x, img_y, m);
    std::vector<std::size_t> subset;
    subset.reserve(m);
    for (const auto& pair : report.training_set.pairs) subset.push_back(pair.pixel);
    report.d_h_x = hellinger_multichannel(img_x, subset, n_bins);
    report.d_h_y = hellinger_multichannel(img_y, subset, n_bins);
    if (change_mask) {
        if (change_mask->size() != scores.size())
            throw std::invalid_argument("select_with_diagnostics: mask size mismatch");
        std::size_t inside = 0;
        for (std::size_t pix : subset)
            if ((*change_mask)[pix]) ++inside;
        report.fn_fraction = double(inside) / double(m);
    }
    return report;
}

}  // namespace hcd
