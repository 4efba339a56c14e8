#include "hcd/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hcd/parallel.hpp"

namespace hcd {

ChangeScores distance_image(const ImageStack& original, const PredictedImage& predicted) {
    const ImageStack& pred = predicted.image;
    if (original.height != pred.height || original.width != pred.width ||
        original.channels != pred.channels)
        throw std::invalid_argument("distance_image: shape mismatch");
    ChangeScores d(original.height, original.width, ScoreKind::distance);
    for (std::size_t n = 0; n < original.num_pixels(); ++n) {
        double s = 0.0;
        for (int c = 0; c < original.channels; ++c) {
            const double diff = original.pixel(n)[c] - pred.pixel(n)[c];
            s += diff * diff;
        }
        d.values[n] = std::sqrt(s);
    }
    return d;
}

ChangeScores clip_normalize(const ChangeScores& d, double num_sigma) {
    if (d.values.empty()) throw std::invalid_argument("clip_normalize: empty map");
    const double n = double(d.values.size());
    const double mean = std::accumulate(d.values.begin(), d.values.end(), 0.0) / n;
    double var = 0.0;
    for (double v : d.values) var += (v - mean) * (v - mean);
    const double cap = mean + num_sigma * std::sqrt(var / n);

    ChangeScores out = d;
    for (double& v : out.values) v = std::min(v, cap);
    min_max_normalize(out.values);
    return out;
}

ChangeScores fuse(const ChangeScores& dx, const ChangeScores& dy) {
    if (dx.height != dy.height || dx.width != dy.width)
        throw std::invalid_argument("fuse: shape mismatch");
    ChangeScores out(dx.height, dx.width, ScoreKind::distance);
    for (std::size_t n = 0; n < out.size(); ++n)
        out.values[n] = 0.5 * (dx.values[n] + dy.values[n]);
    return out;
}

namespace {

// Min-max normalized per-pixel feature rows built from both guide images'
// channels, concatenated.
std::vector<double> guide_features(const ImageStack& gx, const ImageStack& gy) {
    const std::size_t n = gx.num_pixels();
    const int dim = gx.channels + gy.channels;
    std::vector<double> feats(n * dim);
    for (int c = 0; c < gx.channels; ++c) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = gx.pixel(i)[c];
        min_max_normalize(col);
        for (std::size_t i = 0; i < n; ++i) feats[i * dim + c] = col[i];
    }
    for (int c = 0; c < gy.channels; ++c) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = gy.pixel(i)[c];
        min_max_normalize(col);
        for (std::size_t i = 0; i < n; ++i) feats[i * dim + gx.channels + c] = col[i];
    }
    return feats;
}

}  // namespace

ChangeScores meanfield_filter(const ChangeScores& d, const ImageStack& guide_x,
                              const ImageStack& guide_y, const FilterConfig& config) {
    const int h = d.height, w = d.width;
    if (guide_x.height != h || guide_x.width != w || guide_y.height != h || guide_y.width != w)
        throw std::invalid_argument("meanfield_filter: guide dimensions mismatch");
    if (config.spatial_radius >= h || config.spatial_radius >= w)
        throw std::invalid_argument("meanfield_filter: radius exceeds image size");
    if (config.kernel_width <= 0.0 || config.iterations < 0)
        throw std::invalid_argument("meanfield_filter: invalid config");

    ChangeScores out = d;
    out.kind = ScoreKind::filtered;
    if (config.iterations == 0) return out;

    const int radius = config.spatial_radius;
    const int dim = guide_x.channels + guide_y.channels;
    const std::vector<double> feats = guide_features(guide_x, guide_y);

    // Precomputed spatial kernel over the truncation window.
    const int win = 2 * radius + 1;
    std::vector<double> spatial(std::size_t(win) * win);
    const double inv_ss = -0.5 / (config.spatial_sigma * config.spatial_sigma);
    for (int dr = -radius; dr <= radius; ++dr)
        for (int dc = -radius; dc <= radius; ++dc)
            spatial[std::size_t(dr + radius) * win + (dc + radius)] =
                std::exp((dr * dr + dc * dc) * inv_ss);

    const double inv_kw = -0.5 / (config.kernel_width * config.kernel_width);
    std::vector<double> cur = out.values;
    std::vector<double> next(cur.size());

    for (int it = 0; it < config.iterations; ++it) {
        parallel_blocks(std::size_t(h), [&](std::size_t row_begin, std::size_t row_end) {
            for (std::size_t r = row_begin; r < row_end; ++r) {
                for (int c = 0; c < w; ++c) {
                    const std::size_t n = r * w + c;
                    const double* fn = &feats[n * dim];
                    double wsum = 0.0, acc = 0.0;
                    for (int dr = -radius; dr <= radius; ++dr) {
                        int rr = int(r) + dr;
                        if (config.periodic)
                            rr = (rr % h + h) % h;
                        else if (rr < 0 || rr >= h)
                            continue;
                        for (int dc = -radius; dc <= radius; ++dc) {
                            int cc = c + dc;
                            if (config.periodic)
                                cc = (cc % w + w) % w;
                            else if (cc < 0 || cc >= w)
                                continue;
                            const std::size_t nm = std::size_t(rr) * w + cc;
                            const double* fm = &feats[nm * dim];
                            double fd2 = 0.0;
                            for (int f = 0; f < dim; ++f) {
                                const double diff = fn[f] - fm[f];
                                fd2 += diff * diff;
                            }
                            const double weight =
                                spatial[std::size_t(dr + radius) * win + (dc + radius)] *
                                std::exp(fd2 * inv_kw);
                            wsum += weight;
                            acc += weight * cur[nm];
                        }
                    }
                    next[n] = acc / wsum;
                }
            }
        });
        std::swap(cur, next);
    }
    out.values = std::move(cur);
    return out;
}

ThresholdResult otsu_threshold(const ChangeScores& d, int num_bins) {
    if (num_bins < 2) throw std::invalid_argument("otsu_threshold: num_bins < 2");
    ThresholdResult result;
    result.change_map.assign(d.size(), 0);

    const auto [lo_it, hi_it] = std::minmax_element(d.values.begin(), d.values.end());
    if (*hi_it <= *lo_it) {
        result.degenerate = true;  // constant map: nothing to separate
        return result;
    }

    std::vector<double> hist(num_bins, 0.0);
    for (double v : d.values) {
        int b = int(v * num_bins);
        b = std::clamp(b, 0, num_bins - 1);
        hist[b] += 1.0;
    }
    const double total = double(d.size());
    double sum_all = 0.0;
    for (int b = 0; b < num_bins; ++b) sum_all += (b + 0.5) / num_bins * hist[b];

    // Candidate thresholds are the inner bin edges; maximize the between-class
    // variance, preferring the lowest threshold on ties.
    double best_var = -1.0;
    double best_thr = 0.0;
    double w0 = 0.0, sum0 = 0.0;
    for (int b = 0; b < num_bins - 1; ++b) {
        w0 += hist[b];
        sum0 += (b + 0.5) / num_bins * hist[b];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (between > best_var) {
            best_var = between;
            best_thr = double(b + 1) / num_bins;
        }
    }
    if (best_var < 0.0) {
        result.degenerate = true;
        return result;
    }
    result.threshold = best_thr;
    for (std::size_t n = 0; n < d.size(); ++n)
        result.change_map[n] = d.values[n] > best_thr ? 1 : 0;
    return result;
}

std::optional<double> auc_rank(const std::vector<double>& values,
                               const std::vector<std::uint8_t>& labels) {
    if (values.size() != labels.size())
        throw std::invalid_argument("auc_rank: size mismatch");
    const std::size_t n = values.size();
    std::size_t n_pos = 0;
    for (auto l : labels) n_pos += l ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t(0));
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    // Mann-Whitney with mid-ranks for ties.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mid_rank = 0.5 * double(i + 1 + j + 1);
        for (std::size_t t = i; t <= j; ++t)
            if (labels[order[t]]) rank_sum_pos += mid_rank;
        i = j + 1;
    }
    const double u = rank_sum_pos - double(n_pos) * double(n_pos + 1) / 2.0;
    return u / (double(n_pos) * double(n_neg));
}

MetricsReport score(const std::vector<std::uint8_t>& binary_map, const ChangeScores* scores,
                    const std::vector<std::uint8_t>& ground_truth, double threshold_used) {
    if (binary_map.size() != ground_truth.size())
        throw std::invalid_argument("score: map/mask size mismatch");
    MetricsReport report;
    report.threshold_used = threshold_used;
    for (std::size_t n = 0; n < binary_map.size(); ++n) {
        const bool pred = binary_map[n] != 0;
        const bool truth = ground_truth[n] != 0;
        if (pred && truth) ++report.confusion.tp;
        else if (!pred && !truth) ++report.confusion.tn;
        else if (pred) ++report.confusion.fp;
        else ++report.confusion.fn;
    }
    const double n = double(report.confusion.total());
    const auto& cc = report.confusion;
    report.oa = double(cc.tp + cc.tn) / n;
    const double pe = (double(cc.tp + cc.fp) / n) * (double(cc.tp + cc.fn) / n) +
                      (double(cc.fn + cc.tn) / n) * (double(cc.fp + cc.tn) / n);
    if (pe < 1.0)
        report.kappa = (report.oa - pe) / (1.0 - pe);

    if (scores) {
        if (scores->size() != ground_truth.size())
            throw std::invalid_argument("score: scores/mask size mismatch");
        report.auc = auc_rank(scores->values, ground_truth);
    }
    return report;
}

}  // namespace hcd
