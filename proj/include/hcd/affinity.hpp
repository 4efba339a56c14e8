#pragma once

#include <vector>

#include "hcd/image.hpp"

namespace hcd {

/// k^2 x k^2 Gaussian-kernel affinity matrix of one patch.
struct AffinityMatrix {
    int dim = 0;                  // k^2
    std::vector<double> entries;  // row-major, symmetric, unit diagonal
    double kernel_width = 0.0;    // h

    double at(int i, int j) const { return entries[std::size_t(i) * dim + j]; }
};

/// Per-patch Frobenius norm together with its anchor, for diagnostics.
struct PatchNormRecord {
    Anchor anchor;
    double norm = 0.0;
};

/// Pairwise Euclidean distances between the k^2 channel vectors of a patch.
/// `vectors` is the k^2 x C row-major buffer from extract_patch_vectors.
std::vector<double> pairwise_distances(const std::vector<double>& vectors, int num_vectors);

/// Kernel width h: mean over patch pixels of the distance to the 7th nearest
/// neighbour (rank clamped to k^2-1 for small patches). h = 0 signals a
/// degenerate all-equal patch.
double kernel_width(const std::vector<double>& distances, int dim);

/// A_ij = exp(-d_ij^2 / h^2). For h = 0, A_ij is the indicator of d_ij = 0.
AffinityMatrix affinity_from_distances(const std::vector<double>& distances, int dim, double h);

/// Frobenius norm of the element-wise difference of two affinity matrices.
double patch_norm(const AffinityMatrix& ax, const AffinityMatrix& ay);

/// Per-patch norms for every anchor of the strided grid (parallel over
/// anchors, deterministic output order).
std::vector<PatchNormRecord> patch_norms(const ImageStack& img_x, const ImageStack& img_y,
                                         const PatchSpec& spec);

struct PossibilityOptions {
    bool normalize = true;  // min-max scale the accumulated means to [0,1]
};

/// Algorithm: for every patch, compare the two modalities' affinity matrices
/// and assign the Frobenius norm to all covered pixels; each pixel's change
/// possibility is the mean over its covering patches.
ChangeScores possibility_map(const ImageStack& img_x, const ImageStack& img_y,
                             const PatchSpec& spec, const PossibilityOptions& opts = {});

}  // namespace hcd
