#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "binio.hpp"
#include "hcd/parallel.hpp"
#include "regressors_impl.hpp"

namespace hcd::detail {
namespace {

struct Neighbor {
    double dist = 0.0;
    int index = -1;
    bool operator<(const Neighbor& o) const { return dist < o.dist; }
};

// Fixed-size max-heap of the K closest points seen so far.
class NeighborHeap {
  public:
    explicit NeighborHeap(int k) : k_(k) { heap_.reserve(k); }
    double worst() const {
        return int(heap_.size()) < k_ ? std::numeric_limits<double>::infinity()
                                      : heap_.front().dist;
    }
    void offer(double dist, int index) {
        if (int(heap_.size()) < k_) {
            heap_.push_back({dist, index});
            std::push_heap(heap_.begin(), heap_.end());
        } else if (dist < heap_.front().dist) {
            std::pop_heap(heap_.begin(), heap_.end());
            heap_.back() = {dist, index};
            std::push_heap(heap_.begin(), heap_.end());
        }
    }
    std::vector<Neighbor> sorted() {
        std::sort_heap(heap_.begin(), heap_.end());
        return std::move(heap_);
    }

  private:
    int k_;
    std::vector<Neighbor> heap_;
};

// Median-layout kd-tree over an index permutation: the subtree of range
// [lo, hi) is rooted at its midpoint, split on axis = depth mod P.
void kd_build(const Matrix& points, std::vector<int>& perm, int lo, int hi, int depth) {
    if (hi - lo <= 1) return;
    const int axis = depth % int(points.cols());
    const int mid = (lo + hi) / 2;
    std::nth_element(perm.begin() + lo, perm.begin() + mid, perm.begin() + hi,
                     [&](int a, int b) { return points(a, axis) < points(b, axis); });
    kd_build(points, perm, lo, mid, depth + 1);
    kd_build(points, perm, mid + 1, hi, depth + 1);
}

void kd_search(const Matrix& points, const std::vector<int>& perm, int lo, int hi, int depth,
               const Eigen::RowVectorXd& query, NeighborHeap& heap) {
    if (hi <= lo) return;
    const int mid = (lo + hi) / 2;
    const int idx = perm[mid];
    heap.offer((points.row(idx) - query).norm(), idx);
    if (hi - lo == 1) return;
    const int axis = depth % int(points.cols());
    const double delta = query(axis) - points(idx, axis);
    const int near_lo = delta <= 0.0 ? lo : mid + 1;
    const int near_hi = delta <= 0.0 ? mid : hi;
    const int far_lo = delta <= 0.0 ? mid + 1 : lo;
    const int far_hi = delta <= 0.0 ? hi : mid;
    kd_search(points, perm, near_lo, near_hi, depth + 1, query, heap);
    if (std::abs(delta) < heap.worst())
        kd_search(points, perm, far_lo, far_hi, depth + 1, query, heap);
}

}  // namespace

void HptModel::build_index() {
    kd_nodes_.clear();
    if (std::size_t(train_inputs_.rows()) <= kHptBruteForceLimit) return;
    kd_nodes_.resize(train_inputs_.rows());
    std::iota(kd_nodes_.begin(), kd_nodes_.end(), 0);
    kd_build(train_inputs_, kd_nodes_, 0, int(kd_nodes_.size()), 0);
}

std::unique_ptr<HptModel> HptModel::fit(const HptConfig& config, const Matrix& inputs,
                                        const Matrix& targets) {
    if (config.num_neighbors < 1) throw std::invalid_argument("hpt: num_neighbors < 1");
    if (config.kernel_decay < 0.0) throw std::invalid_argument("hpt: kernel_decay < 0");
    auto model = std::make_unique<HptModel>();
    model->config_ = config;
    model->in_std_ = Standardizer::fit(inputs);
    model->out_std_ = Standardizer::fit(targets);
    model->train_inputs_ = model->in_std_.apply(inputs);
    model->train_targets_ = model->out_std_.apply(targets);
    model->build_index();
    return model;
}

Matrix HptModel::predict(const Matrix& inputs) const {
    if (inputs.cols() != train_inputs_.cols())
        throw std::invalid_argument("hpt predict: input width mismatch");
    const int m = int(train_inputs_.rows());
    const int k = std::min(config_.num_neighbors, m);
    const Matrix queries = in_std_.apply(inputs);
    const auto n = queries.rows();

    // Neighbor sets are gathered first: absolute normalization divides every
    // distance by the global maximum query-to-neighbor distance.
    std::vector<std::vector<Neighbor>> hits(n);
    parallel_blocks(std::size_t(n), [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            NeighborHeap heap(k);
            const Eigen::RowVectorXd query = queries.row(Eigen::Index(r));
            if (kd_nodes_.empty()) {
                for (int t = 0; t < m; ++t)
                    heap.offer((train_inputs_.row(t) - query).norm(), t);
            } else {
                kd_search(train_inputs_, kd_nodes_, 0, int(kd_nodes_.size()), 0, query, heap);
            }
            hits[r] = heap.sorted();
        }
    });

    double global_max = 0.0;
    if (config_.normalization == HptConfig::Normalization::absolute) {
        for (const auto& neighbor_set : hits)
            for (const auto& nb : neighbor_set) global_max = std::max(global_max, nb.dist);
    }

    Matrix out(n, train_targets_.cols());
    parallel_blocks(std::size_t(n), [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            const auto& neighbor_set = hits[r];
            double local_max = global_max;
            if (config_.normalization == HptConfig::Normalization::relative) {
                local_max = 0.0;
                for (const auto& nb : neighbor_set) local_max = std::max(local_max, nb.dist);
            }
            double wsum = 0.0;
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(train_targets_.cols());
            for (const auto& nb : neighbor_set) {
                const double d = local_max > 0.0 ? nb.dist / local_max : 0.0;
                const double w = std::exp(-config_.kernel_decay * d);
                acc += w * train_targets_.row(nb.index);
                wsum += w;
            }
            out.row(Eigen::Index(r)) = acc / wsum;
        }
    });
    return out_std_.invert(out);
}

void HptModel::save_payload(std::ostream& os) const {
    binio::write_vector(os, in_std_.mean);
    binio::write_vector(os, in_std_.scale);
    binio::write_vector(os, out_std_.mean);
    binio::write_vector(os, out_std_.scale);
    binio::write_matrix(os, train_inputs_);
    binio::write_matrix(os, train_targets_);
    binio::write_pod<std::int32_t>(os, config_.num_neighbors);
    binio::write_pod<double>(os, config_.kernel_decay);
    binio::write_pod<std::uint8_t>(os, std::uint8_t(config_.normalization));
}

std::unique_ptr<HptModel> HptModel::load_payload(std::istream& is) {
    auto model = std::make_unique<HptModel>();
    model->in_std_.mean = binio::read_vector(is);
    model->in_std_.scale = binio::read_vector(is);
    model->out_std_.mean = binio::read_vector(is);
    model->out_std_.scale = binio::read_vector(is);
    model->train_inputs_ = binio::read_matrix(is);
    model->train_targets_ = binio::read_matrix(is);
    model->config_.num_neighbors = binio::read_pod<std::int32_t>(is);
    model->config_.kernel_decay = binio::read_pod<double>(is);
    model->config_.normalization = HptConfig::Normalization(binio::read_pod<std::uint8_t>(is));
    model->build_index();
    return model;
}

}  // namespace hcd::detail
