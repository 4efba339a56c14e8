#pragma once

#include <string>
#include <vector>

#include "hcd/image.hpp"

namespace hcd {

/// NPY v1.0, little-endian float32. Images are shape (n1, n2, C), score maps
/// and masks are (n1, n2).
void write_npy(const std::string& path, const ImageStack& image);
void write_npy(const std::string& path, const ChangeScores& scores);
ImageStack read_npy_image(const std::string& path);
ChangeScores read_npy_scores(const std::string& path, ScoreKind kind);

/// Binary mask helpers on top of the (n1, n2) layout; any nonzero value is 1.
std::vector<std::uint8_t> read_npy_mask(const std::string& path, int& n1, int& n2);
void write_npy_mask(const std::string& path, const std::vector<std::uint8_t>& mask,
                    int n1, int n2);

/// 8-bit single-channel PNG; 0 = no change, 255 = change.
void write_png_mask(const std::string& path, const std::vector<std::uint8_t>& map,
                    int n1, int n2);
std::vector<std::uint8_t> read_png_mask(const std::string& path, int& n1, int& n2);

/// Training-set file: magic "HCDT1", counts, then per-pair pixel index and
/// both feature vectors as float64.
void write_training_set(const std::string& path, const TrainingSet& ts);
TrainingSet read_training_set(const std::string& path);

}  // namespace hcd
