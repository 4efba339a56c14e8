#include "hcd/affinity.hpp"

#include <algorithm>
#include <cmath>

#include "hcd/parallel.hpp"

namespace hcd {

std::vector<double> pairwise_distances(const std::vector<double>& vectors, int num_vectors) {
    if (num_vectors < 2)
        throw std::invalid_argument("pairwise_distances: need at least 2 vectors");
    if (vectors.size() % num_vectors != 0)
        throw std::invalid_argument("pairwise_distances: mismatched vector lengths");
    const int c = int(vectors.size() / num_vectors);
    std::vector<double> d(std::size_t(num_vectors) * num_vectors, 0.0);
    for (int i = 0; i < num_vectors; ++i) {
        const double* vi = &vectors[std::size_t(i) * c];
        for (int j = i + 1; j < num_vectors; ++j) {
            const double* vj = &vectors[std::size_t(j) * c];
            double s = 0.0;
            for (int ch = 0; ch < c; ++ch) {
                const double diff = vi[ch] - vj[ch];
                s += diff * diff;
            }
            const double dist = std::sqrt(s);
            d[std::size_t(i) * num_vectors + j] = dist;
            d[std::size_t(j) * num_vectors + i] = dist;
        }
    }
    return d;
}

double kernel_width(const std::vector<double>& distances, int dim) {
    if (dim < 2) throw std::invalid_argument("kernel_width: dim < 2");
    const int rank = std::min(7, dim - 1);  // 1-based rank among the other pixels
    std::vector<double> row(dim - 1);
    double sum = 0.0;
    for (int i = 0; i < dim; ++i) {
        int m = 0;
        for (int j = 0; j < dim; ++j)
            if (j != i) row[m++] = distances[std::size_t(i) * dim + j];
        std::nth_element(row.begin(), row.begin() + (rank - 1), row.end());
        sum += row[rank - 1];
    }
    return sum / dim;
}

AffinityMatrix affinity_from_distances(const std::vector<double>& distances, int dim, double h) {
    AffinityMatrix a;
    a.dim = dim;
    a.kernel_width = h;
    a.entries.resize(std::size_t(dim) * dim);
    const double inv_h2 = h > 0.0 ? 1.0 / (h * h) : 0.0;
    for (int i = 0; i < dim; ++i) {
        a.entries[std::size_t(i) * dim + i] = 1.0;
        for (int j = i + 1; j < dim; ++j) {
            const double d = distances[std::size_t(i) * dim + j];
            if (d < 0.0) throw std::invalid_argument("affinity_from_distances: negative distance");
            double v;
            if (h > 0.0)
                v = std::exp(-d * d * inv_h2);
            else
                v = (d == 0.0) ? 1.0 : 0.0;  // limit of the kernel as h -> 0+
            a.entries[std::size_t(i) * dim + j] = v;
            a.entries[std::size_t(j) * dim + i] = v;
        }
    }
    return a;
}

double patch_norm(const AffinityMatrix& ax, const AffinityMatrix& ay) {
    if (ax.dim != ay.dim)
        throw std::invalid_argument("patch_norm: dimension mismatch");
    double s = 0.0;
    for (std::size_t e = 0; e < ax.entries.size(); ++e) {
        const double diff = ax.entries[e] - ay.entries[e];
        s += diff * diff;
    }
    return std::sqrt(s);
}

namespace {

// Frobenius norm of A^X - A^Y for one patch, without materialising the
// matrices: only the upper triangle is evaluated (the diagonals cancel).
double patch_norm_at(const ImageStack& img_x, const ImageStack& img_y,
                     Anchor a, int k) {
    const int dim = k * k;
    const auto vx = extract_patch_vectors(img_x, a, k);
    const auto vy = extract_patch_vectors(img_y, a, k);
    const auto dx = pairwise_distances(vx, dim);
    const auto dy = pairwise_distances(vy, dim);
    const double hx = kernel_width(dx, dim);
    const double hy = kernel_width(dy, dim);
    const double inv_hx2 = hx > 0.0 ? 1.0 / (hx * hx) : 0.0;
    const double inv_hy2 = hy > 0.0 ? 1.0 / (hy * hy) : 0.0;
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        for (int j = i + 1; j < dim; ++j) {
            const double ddx = dx[std::size_t(i) * dim + j];
            const double ddy = dy[std::size_t(i) * dim + j];
            const double ax = hx > 0.0 ? std::exp(-ddx * ddx * inv_hx2) : (ddx == 0.0 ? 1.0 : 0.0);
            const double ay = hy > 0.0 ? std::exp(-ddy * ddy * inv_hy2) : (ddy == 0.0 ? 1.0 : 0.0);
            const double diff = ax - ay;
            s += 2.0 * diff * diff;
        }
    }
    return std::sqrt(s);
}

}  // namespace

std::vector<PatchNormRecord> patch_norms(const ImageStack& img_x, const ImageStack& img_y,
                                         const PatchSpec& spec) {
    if (img_x.height != img_y.height || img_x.width != img_y.width)
        throw std::invalid_argument("patch_norms: image dimensions differ");
    const auto anchors = patch_anchors(img_x.height, img_x.width, spec);
    std::vector<PatchNormRecord> records(anchors.size());
    parallel_blocks(anchors.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p)
            records[p] = {anchors[p], patch_norm_at(img_x, img_y, anchors[p], spec.k)};
    });
    return records;
}

ChangeScores possibility_map(const ImageStack& img_x, const ImageStack& img_y,
                             const PatchSpec& spec, const PossibilityOptions& opts) {
    const auto records = patch_norms(img_x, img_y, spec);
    const int n1 = img_x.height, n2 = img_x.width;
    ChangeScores scores(n1, n2, ScoreKind::possibility);
    std::vector<std::uint32_t> counts(scores.size(), 0);
    // Sequential accumulation in anchor order keeps the result bitwise
    // deterministic regardless of how patch_norms was parallelised.
    for (const auto& rec : records) {
        for (int i = 0; i < spec.k; ++i) {
            const std::size_t row_base = std::size_t(rec.anchor.row + i) * n2 + rec.anchor.col;
            for (int j = 0; j < spec.k; ++j) {
                scores.values[row_base + j] += rec.norm;
                ++counts[row_base + j];
            }
        }
    }
    for (std::size_t n = 0; n < scores.size(); ++n) {
        if (counts[n] == 0)
            throw std::logic_error("possibility_map: uncovered pixel");
        scores.values[n] /= counts[n];
    }
    if (opts.normalize) min_max_normalize(scores.values);
    return scores;
}

}  // namespace hcd
