#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hcd/image.hpp"

namespace hcd {

enum class BaseTexture { smooth_gradient, blobs };
enum class CrossMap { linear, quadratic, exp_mix };

BaseTexture base_texture_from_string(const std::string& name);
CrossMap cross_map_from_string(const std::string& name);

/// Seeded generator configuration for a synthetic heterogeneous image pair
/// with planted ground truth.
struct SynthConfig {
    int n1 = 256;
    int n2 = 256;
    int channels_x = 3;  // P
    int channels_y = 3;  // Q
    std::uint64_t rng_seed = 0;
    int num_change_regions = 4;
    double change_area_fraction = 0.1;
    BaseTexture base_texture = BaseTexture::smooth_gradient;
    double noise_sigma_x = 0.05;
    double noise_sigma_y = 0.05;
    CrossMap cross_map = CrossMap::linear;

    void validate() const;
};

struct SynthPair {
    ImageStack img_x;
    ImageStack img_y;
    std::vector<std::uint8_t> change_mask;  // 1 = planted change
};

/// Renders a latent scene into modality X (identity plus noise) and modality Y
/// (nonlinear channel mixing plus noise); inside the planted regions the
/// latent content differs between the two acquisition times. The planted
/// pixel count equals round(change_area_fraction * n1 * n2) exactly when the
/// regions can be placed without overlap.
SynthPair generate_pair(const SynthConfig& config);

}  // namespace hcd
