#include "hcd/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace hcd {

BaseTexture base_texture_from_string(const std::string& name) {
    if (name == "smooth-gradient") return BaseTexture::smooth_gradient;
    if (name == "blobs") return BaseTexture::blobs;
    throw std::invalid_argument("unknown base_texture: " + name);
}

CrossMap cross_map_from_string(const std::string& name) {
    if (name == "linear") return CrossMap::linear;
    if (name == "quadratic") return CrossMap::quadratic;
    if (name == "exp-mix") return CrossMap::exp_mix;
    throw std::invalid_argument("unknown cross_map: " + name);
}

void SynthConfig::validate() const {
    if (n1 < 8 || n2 < 8) throw std::invalid_argument("synth: image too small");
    if (channels_x < 1 || channels_y < 1) throw std::invalid_argument("synth: bad channel counts");
    if (change_area_fraction <= 0.0 || change_area_fraction >= 0.5)
        throw std::invalid_argument("synth: change_area_fraction must lie in (0, 0.5)");
    if (num_change_regions < 0) throw std::invalid_argument("synth: negative region count");
    if (noise_sigma_x < 0.0 || noise_sigma_y < 0.0)
        throw std::invalid_argument("synth: negative noise sigma");
}

namespace {

// All randomness flows from the config seed through per-purpose substreams.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t purpose) {
    return std::mt19937_64(seed * 0x9E3779B97F4A7C15ull + purpose);
}

// Latent scene with `channels` structured-texture channels. `freq_scale`
// shifts the spatial frequency content; planted changes use a much smoother
// texture so their local relational statistics differ from the base scene,
// not just their offset (affinity comparisons are translation invariant).
std::vector<double> render_texture(const SynthConfig& cfg, std::mt19937_64& rng,
                                   double freq_scale = 1.0) {
    const std::size_t n = std::size_t(cfg.n1) * cfg.n2;
    std::vector<double> scene(n * cfg.channels_x, 0.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    if (cfg.base_texture == BaseTexture::smooth_gradient) {
        for (int c = 0; c < cfg.channels_x; ++c) {
            double fr[3], fc[3], ph[3], amp[3];
            for (int w = 0; w < 3; ++w) {
                fr[w] = freq_scale * (0.5 + 3.0 * uni(rng));
                fc[w] = freq_scale * (0.5 + 3.0 * uni(rng));
                ph[w] = 2.0 * M_PI * uni(rng);
                amp[w] = 0.3 + 0.7 * uni(rng);
            }
            for (int r = 0; r < cfg.n1; ++r)
                for (int col = 0; col < cfg.n2; ++col) {
                    double v = 0.0;
                    for (int w = 0; w < 3; ++w)
                        v += amp[w] * std::sin(2.0 * M_PI *
                                                   (fr[w] * r / cfg.n1 + fc[w] * col / cfg.n2) +
                                               ph[w]);
                    scene[(std::size_t(r) * cfg.n2 + col) * cfg.channels_x + c] = v;
                }
        }
    } else {  // blobs
        const int num_blobs = 24;
        for (int c = 0; c < cfg.channels_x; ++c) {
            for (int b = 0; b < num_blobs; ++b) {
                const double cr = cfg.n1 * uni(rng);
                const double cc = cfg.n2 * uni(rng);
                const double sigma = (4.0 + 0.08 * std::min(cfg.n1, cfg.n2) * uni(rng)) / freq_scale;
                const double amp = (uni(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + uni(rng));
                const double inv = -0.5 / (sigma * sigma);
                for (int r = 0; r < cfg.n1; ++r)
                    for (int col = 0; col < cfg.n2; ++col) {
                        const double d2 = (r - cr) * (r - cr) + (col - cc) * (col - cc);
                        scene[(std::size_t(r) * cfg.n2 + col) * cfg.channels_x + c] +=
                            amp * std::exp(d2 * inv);
                    }
            }
        }
    }
    return scene;
}

// Stamps non-overlapping rectangles totalling round(fraction * N) pixels.
// Cells hold the 1-based region index so later stages can vary the planted
// content per region; callers binarize before exposing the mask.
std::vector<std::uint8_t> stamp_regions(const SynthConfig& cfg, std::mt19937_64& rng) {
    const std::size_t n = std::size_t(cfg.n1) * cfg.n2;
    std::vector<std::uint8_t> mask(n, 0);
    if (cfg.num_change_regions == 0) return mask;
    const long target = std::lround(cfg.change_area_fraction * double(n));
    const int regions = cfg.num_change_regions;
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    long remaining = target;
    for (int reg = 0; reg < regions; ++reg) {
        const long area = reg + 1 < regions ? target / regions : remaining;
        if (area <= 0) break;
        int width = std::max(1, int(std::floor(std::sqrt(double(area)))));
        width = std::min(width, cfg.n2 - 2);
        const long full_rows = area / width;
        const long extra = area - full_rows * width;  // cells in a partial last row
        const int height = int(full_rows) + (extra > 0 ? 1 : 0);
        if (height >= cfg.n1 - 1) throw std::runtime_error("synth: region does not fit");

        bool placed = false;
        for (int attempt = 0; attempt < 400 && !placed; ++attempt) {
            const int r0 = int((cfg.n1 - height) * uni(rng));
            const int c0 = int((cfg.n2 - width) * uni(rng));
            bool clear = true;
            for (int r = r0; r < r0 + height && clear; ++r)
                for (int c = c0; c < c0 + width && clear; ++c)
                    if (mask[std::size_t(r) * cfg.n2 + c]) clear = false;
            if (!clear) continue;
            long stamped = 0;
            for (int r = r0; r < r0 + height && stamped < area; ++r)
                for (int c = c0; c < c0 + width && stamped < area; ++c) {
                    mask[std::size_t(r) * cfg.n2 + c] =
                        std::uint8_t(1 + reg % 254);
                    ++stamped;
                }
            remaining -= stamped;
            placed = true;
        }
        if (!placed) throw std::runtime_error("synth: could not place change region");
    }
    return mask;
}

// Chebyshev distance to the nearest unchanged pixel (two-pass chamfer),
// used to feather planted regions so the change ramps in over a few pixels.
std::vector<double> boundary_distance(const std::vector<std::uint8_t>& mask, int n1, int n2) {
    const double inf = 1e9;
    std::vector<double> d(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) d[i] = mask[i] ? inf : 0.0;
    auto at = [&](int r, int c) -> double& { return d[std::size_t(r) * n2 + c]; };
    for (int r = 0; r < n1; ++r)
        for (int c = 0; c < n2; ++c) {
            double best = at(r, c);
            if (r > 0) {
                best = std::min(best, at(r - 1, c) + 1);
                if (c > 0) best = std::min(best, at(r - 1, c - 1) + 1);
                if (c + 1 < n2) best = std::min(best, at(r - 1, c + 1) + 1);
            }
            if (c > 0) best = std::min(best, at(r, c - 1) + 1);
            at(r, c) = best;
        }
    for (int r = n1 - 1; r >= 0; --r)
        for (int c = n2 - 1; c >= 0; --c) {
            double best = at(r, c);
            if (r + 1 < n1) {
                best = std::min(best, at(r + 1, c) + 1);
                if (c > 0) best = std::min(best, at(r + 1, c - 1) + 1);
                if (c + 1 < n2) best = std::min(best, at(r + 1, c + 1) + 1);
            }
            if (c + 1 < n2) best = std::min(best, at(r, c + 1) + 1);
            at(r, c) = best;
        }
    return d;
}

}  // namespace

SynthPair generate_pair(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t n = std::size_t(cfg.n1) * cfg.n2;
    const int p = cfg.channels_x, q = cfg.channels_y;

    auto texture_rng = substream(cfg.rng_seed, 1);
    auto change_rng = substream(cfg.rng_seed, 2);
    auto region_rng = substream(cfg.rng_seed, 3);
    auto noise_x_rng = substream(cfg.rng_seed, 4);
    auto noise_y_rng = substream(cfg.rng_seed, 5);
    auto map_rng = substream(cfg.rng_seed, 6);

    const std::vector<double> latent_t1 = render_texture(cfg, texture_rng);
    const std::vector<std::uint8_t> mask = stamp_regions(cfg, region_rng);

    // Channel mixing from the latent scene to modality Y.
    std::vector<double> mix(std::size_t(q) * p);
    std::vector<double> bias(q);
    {
        std::uniform_real_distribution<double> uni(0.3, 1.0);
        std::uniform_real_distribution<double> sign(0.0, 1.0);
        for (int row = 0; row < q; ++row) {
            for (int col = 0; col < p; ++col)
                mix[std::size_t(row) * p + col] = uni(map_rng) * (sign(map_rng) < 0.25 ? -1 : 1);
            bias[row] = uni(map_rng) - 0.65;
        }
    }

    // Time-two latent: identical outside changes. Planted regions alternate
    // between two kinds of content so the pair exercises both pipeline stages:
    //   - odd-indexed regions overlay a fine checkerboard on a freshly drawn
    //     low-frequency scene. Spatial neighbours become dissimilar while
    //     same-parity pixels agree — the opposite relational structure of the
    //     smooth base scene — so the affinity comparison fires throughout the
    //     region rather than only where a patch straddles its boundary.
    //   - even-indexed regions replace the content with the redrawn smooth
    //     scene alone. Locally that looks like a shifted copy of a smooth
    //     texture, which the translation-tolerant affinity prior largely
    //     misses, but the regression stage catches it as a large residual.
    // Both kinds share a mean shift whose sign follows the mixing-matrix
    // column sums so it survives the cross-map instead of cancelling, and
    // both are feathered in over a few pixels so a patch's response grows
    // with how much genuine change it covers instead of spiking on slivers
    // (a hard edge inflates the adaptive kernel width and rewards
    // barely-overlapping patches more than fully covered ones).
    std::vector<double> latent_t2 = latent_t1;
    {
        constexpr double feather_px = 4.0;
        constexpr double checker_amp = 0.35;   // checkerboard half-swing
        constexpr double checker_base = 0.3;   // residual smooth content under the checker
        constexpr double mean_shift = 1.8;
        std::uniform_real_distribution<double> amp_jitter(0.75, 1.25);
        std::vector<double> amp(p), offset(p);
        for (int c = 0; c < p; ++c) amp[c] = checker_amp * amp_jitter(change_rng);
        for (int c = 0; c < p; ++c) {
            double colsum = 0.0;
            for (int row = 0; row < q; ++row) colsum += mix[std::size_t(row) * p + c];
            offset[c] = colsum < 0.0 ? -mean_shift : mean_shift;
        }
        const std::vector<double> redrawn = render_texture(cfg, change_rng, 0.25);
        const std::vector<double> bd = boundary_distance(mask, cfg.n1, cfg.n2);
        for (int r = 0; r < cfg.n1; ++r)
            for (int col = 0; col < cfg.n2; ++col) {
                const std::size_t i = std::size_t(r) * cfg.n2 + col;
                if (!mask[i]) continue;
                const double w = std::min(1.0, bd[i] / feather_px);
                if (mask[i] & 1) {
                    const double parity = ((r + col) & 1) ? 1.0 : -1.0;
                    for (int c = 0; c < p; ++c)
                        latent_t2[i * p + c] =
                            (1.0 - w) * latent_t1[i * p + c] +
                            w * (checker_base * redrawn[i * p + c] +
                                 parity * amp[c] + offset[c]);
                } else {
                    for (int c = 0; c < p; ++c)
                        latent_t2[i * p + c] =
                            (1.0 - w) * latent_t1[i * p + c] +
                            w * (redrawn[i * p + c] + offset[c]);
                }
            }
    }

    SynthPair pair;
    pair.change_mask = mask;
    for (auto& m : pair.change_mask) m = m ? 1 : 0;
    pair.img_x = ImageStack(cfg.n1, cfg.n2, p, "X");
    {
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma_x);
        for (std::size_t i = 0; i < n * p; ++i)
            pair.img_x.data[i] = latent_t1[i] + (cfg.noise_sigma_x > 0 ? noise(noise_x_rng) : 0.0);
    }
    pair.img_y = ImageStack(cfg.n1, cfg.n2, q, "Y");
    {
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma_y);
        for (std::size_t i = 0; i < n; ++i) {
            for (int row = 0; row < q; ++row) {
                double lin = bias[row];
                for (int col = 0; col < p; ++col)
                    lin += mix[std::size_t(row) * p + col] * latent_t2[i * p + col];
                double v = lin;
                switch (cfg.cross_map) {
                    case CrossMap::linear: break;
                    case CrossMap::quadratic: v = lin + 0.3 * lin * lin; break;
                    case CrossMap::exp_mix: v = std::exp(0.5 * lin); break;
                }
                pair.img_y.data[i * q + row] =
                    v + (cfg.noise_sigma_y > 0 ? noise(noise_y_rng) : 0.0);
            }
        }
    }
    return pair;
}

}  // namespace hcd
