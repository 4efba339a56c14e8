#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "binio.hpp"
#include "hcd/parallel.hpp"
#include "regressors_impl.hpp"

namespace hcd::detail {
namespace {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Total squared deviation from the mean, summed over output dimensions.
double node_sse(const Matrix& targets, const std::vector<int>& idx) {
    const auto q = targets.cols();
    Vector sum = Vector::Zero(q);
    double sumsq = 0.0;
    for (int i : idx) {
        sum += targets.row(i).transpose();
        sumsq += targets.row(i).squaredNorm();
    }
    return sumsq - sum.squaredNorm() / double(idx.size());
}

// Best variance-reduction split over `num_features` randomly drawn features.
SplitChoice best_split(const Matrix& inputs, const Matrix& targets, const std::vector<int>& idx,
                       int num_features, std::mt19937_64& rng) {
    const int p = int(inputs.cols());
    const auto q = targets.cols();
    const double parent = node_sse(targets, idx);

    std::vector<int> features(p);
    std::iota(features.begin(), features.end(), 0);
    for (int f = 0; f < num_features; ++f) {
        std::uniform_int_distribution<int> pick(f, p - 1);
        std::swap(features[f], features[pick(rng)]);
    }

    SplitChoice best;
    std::vector<int> order;
    for (int f = 0; f < num_features; ++f) {
        const int feat = features[f];
        order = idx;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return inputs(a, feat) < inputs(b, feat);
        });
        Vector left_sum = Vector::Zero(q);
        double left_sumsq = 0.0;
        Vector total_sum = Vector::Zero(q);
        double total_sumsq = 0.0;
        for (int i : order) {
            total_sum += targets.row(i).transpose();
            total_sumsq += targets.row(i).squaredNorm();
        }
        const int n = int(order.size());
        for (int pos = 0; pos < n - 1; ++pos) {
            const int i = order[pos];
            left_sum += targets.row(i).transpose();
            left_sumsq += targets.row(i).squaredNorm();
            const double lo = inputs(i, feat);
            const double hi = inputs(order[pos + 1], feat);
            if (hi <= lo) continue;  // cannot separate equal feature values
            const int nl = pos + 1, nr = n - nl;
            const double sse_l = left_sumsq - left_sum.squaredNorm() / nl;
            const Vector right_sum = total_sum - left_sum;
            const double sse_r = (total_sumsq - left_sumsq) - right_sum.squaredNorm() / nr;
            const double gain = parent - sse_l - sse_r;
            if (gain > best.gain) best = {feat, 0.5 * (lo + hi), gain};
        }
    }
    if (best.gain <= 1e-12 * std::max(parent, 1.0)) best.feature = -1;
    return best;
}

Tree build_tree(const Matrix& inputs, const Matrix& targets, const std::vector<int>& sample,
                const RfrConfig& config, int num_features, std::mt19937_64& rng) {
    Tree tree;
    struct Pending {
        std::vector<int> idx;
        int node = 0;
    };
    tree.nodes.emplace_back();
    std::vector<Pending> stack{{sample, 0}};
    while (!stack.empty()) {
        Pending cur = std::move(stack.back());
        stack.pop_back();
        TreeNode& node = tree.nodes[cur.node];
        SplitChoice split;
        if (int(cur.idx.size()) > config.min_leaf_size)
            split = best_split(inputs, targets, cur.idx, num_features, rng);
        if (split.feature < 0) {
            Vector mean = Vector::Zero(targets.cols());
            for (int i : cur.idx) mean += targets.row(i).transpose();
            mean /= double(cur.idx.size());
            node.leaf_mean.assign(mean.data(), mean.data() + mean.size());
            continue;
        }
        std::vector<int> left, right;
        for (int i : cur.idx)
            (inputs(i, split.feature) <= split.threshold ? left : right).push_back(i);
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = int(tree.nodes.size());
        node.right = node.left + 1;
        const int left_id = node.left, right_id = node.right;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stack.push_back({std::move(right), right_id});
        stack.push_back({std::move(left), left_id});
    }
    return tree;
}

}  // namespace

const std::vector<double>& Tree::predict(const Matrix& inputs, Eigen::Index row) const {
    int node = 0;
    while (nodes[node].feature >= 0)
        node = inputs(row, nodes[node].feature) <= nodes[node].threshold ? nodes[node].left
                                                                         : nodes[node].right;
    return nodes[node].leaf_mean;
}

std::unique_ptr<RfrModel> RfrModel::fit(const RfrConfig& config, const Matrix& inputs,
                                        const Matrix& targets) {
    if (config.num_trees < 1) throw std::invalid_argument("rfr: num_trees < 1");
    const int m = int(inputs.rows());
    const int p = int(inputs.cols());
    const int num_features =
        config.features_per_node > 0 ? std::min(config.features_per_node, p)
                                     : std::max(1, p / 3);

    auto model = std::make_unique<RfrModel>();
    model->input_dim_ = p;
    model->output_dim_ = int(targets.cols());
    model->trees_.resize(config.num_trees);
    std::vector<std::vector<int>> in_bag(config.num_trees);

    parallel_blocks(std::size_t(config.num_trees), [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            // Per-tree RNG keyed on (seed, tree) so results do not depend on
            // the thread schedule.
            std::mt19937_64 rng(config.rng_seed * 0x9E3779B97F4A7C15ull + t + 1);
            std::vector<int> sample(m);
            if (config.bootstrap) {
                std::uniform_int_distribution<int> pick(0, m - 1);
                in_bag[t].assign(m, 0);
                for (int i = 0; i < m; ++i) {
                    sample[i] = pick(rng);
                    in_bag[t][sample[i]] = 1;
                }
            } else {
                std::iota(sample.begin(), sample.end(), 0);
            }
            model->trees_[t] = build_tree(inputs, targets, sample, config, num_features, rng);
        }
    });

    if (config.bootstrap) {
        double err = 0.0;
        std::size_t counted = 0;
        for (int i = 0; i < m; ++i) {
            Vector acc = Vector::Zero(targets.cols());
            int votes = 0;
            for (int t = 0; t < config.num_trees; ++t) {
                if (in_bag[t][i]) continue;
                const auto& leaf = model->trees_[t].predict(inputs, i);
                for (Eigen::Index qd = 0; qd < acc.size(); ++qd) acc(qd) += leaf[qd];
                ++votes;
            }
            if (votes == 0) continue;
            acc /= double(votes);
            err += (acc.transpose() - targets.row(i)).squaredNorm();
            ++counted;
        }
        model->oob_mse_ = counted ? err / double(counted) : 0.0;
    } else {
        model->oob_mse_ = std::numeric_limits<double>::quiet_NaN();
    }
    return model;
}

Matrix RfrModel::predict(const Matrix& inputs) const {
    if (int(inputs.cols()) != input_dim_)
        throw std::invalid_argument("rfr predict: input width mismatch");
    Matrix out = Matrix::Zero(inputs.rows(), output_dim_);
    parallel_blocks(std::size_t(inputs.rows()), [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            for (const Tree& tree : trees_) {
                const auto& leaf = tree.predict(inputs, Eigen::Index(r));
                for (int qd = 0; qd < output_dim_; ++qd) out(Eigen::Index(r), qd) += leaf[qd];
            }
        }
    });
    return out / double(trees_.size());
}

void RfrModel::save_payload(std::ostream& os) const {
    binio::write_pod<std::int32_t>(os, input_dim_);
    binio::write_pod<std::int32_t>(os, output_dim_);
    binio::write_pod<double>(os, oob_mse_);
    binio::write_pod<std::uint64_t>(os, trees_.size());
    for (const Tree& tree : trees_) {
        binio::write_pod<std::uint64_t>(os, tree.nodes.size());
        for (const TreeNode& node : tree.nodes) {
            binio::write_pod<std::int32_t>(os, node.feature);
            binio::write_pod<double>(os, node.threshold);
            binio::write_pod<std::int32_t>(os, node.left);
            binio::write_pod<std::int32_t>(os, node.right);
            binio::write_pod<std::uint64_t>(os, node.leaf_mean.size());
            for (double v : node.leaf_mean) binio::write_pod<double>(os, v);
        }
    }
}

std::unique_ptr<RfrModel> RfrModel::load_payload(std::istream& is) {
    auto model = std::make_unique<RfrModel>();
    model->input_dim_ = binio::read_pod<std::int32_t>(is);
    model->output_dim_ = binio::read_pod<std::int32_t>(is);
    model->oob_mse_ = binio::read_pod<double>(is);
    model->trees_.resize(binio::read_pod<std::uint64_t>(is));
    for (Tree& tree : model->trees_) {
        tree.nodes.resize(binio::read_pod<std::uint64_t>(is));
        for (TreeNode& node : tree.nodes) {
            node.feature = binio::read_pod<std::int32_t>(is);
            node.threshold = binio::read_pod<double>(is);
            node.left = binio::read_pod<std::int32_t>(is);
            node.right = binio::read_pod<std::int32_t>(is);
            node.leaf_mean.resize(binio::read_pod<std::uint64_t>(is));
            for (double& v : node.leaf_mean) v = binio::read_pod<double>(is);
        }
    }
    return model;
}

}  // namespace hcd::detail
