#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hcd/regression.hpp"

// Concrete model classes shared by the per-kind translation units.
namespace hcd::detail {

// RBF kernel matrix k(a_i, b_j) = sf2 * exp(-|a_i - b_j|^2 / (2 l^2)).
Matrix rbf_kernel(const Matrix& a, const Matrix& b, double sf2, double length_scale);

class GprModel final : public Regressor {
  public:
    GprModel() = default;
    static std::unique_ptr<GprModel> fit(const GprConfig& config, const Matrix& inputs,
                                         const Matrix& targets, std::size_t memory_cap);

    RegressorKind kind() const override { return RegressorKind::gpr; }
    int input_dim() const override { return int(train_inputs_.cols()); }
    int output_dim() const override { return int(alpha_.cols()); }
    Matrix predict(const Matrix& inputs) const override;
    void save_payload(std::ostream& os) const override;
    static std::unique_ptr<GprModel> load_payload(std::istream& is);

    const GprTheta& theta() const { return theta_; }

  private:
    Standardizer in_std_, out_std_;
    Matrix train_inputs_;  // standardized, M x P
    Matrix alpha_;         // (K + jitter I)^-1 * targets, M x Q
    GprTheta theta_;
    double jitter_rel_ = 1e-6;
};

class SvrModel final : public Regressor {
  public:
    SvrModel() = default;
    static std::unique_ptr<SvrModel> fit(const SvrConfig& config, const Matrix& inputs,
                                         const Matrix& targets, std::size_t memory_cap);

    RegressorKind kind() const override { return RegressorKind::svr; }
    int input_dim() const override { return int(train_inputs_.cols()); }
    int output_dim() const override { return int(beta_.cols()); }
    Matrix predict(const Matrix& inputs) const override;
    void save_payload(std::ostream& os) const override;
    static std::unique_ptr<SvrModel> load_payload(std::istream& is);

    bool converged() const { return converged_; }
    const std::vector<int>& support_vectors() const { return support_vectors_; }

  private:
    Standardizer in_std_, out_std_;
    Matrix train_inputs_;  // standardized, M x P
    Matrix beta_;          // M x Q
    Vector bias_;          // Q
    double rbf_width_ = 1.0;
    std::vector<int> support_vectors_;
    bool converged_ = true;
};

struct TreeNode {
    int feature = -1;        // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    std::vector<double> leaf_mean;  // Q values, leaves only
};

struct Tree {
    std::vector<TreeNode> nodes;
    const std::vector<double>& predict(const Matrix& inputs, Eigen::Index row) const;
};

class RfrModel final : public Regressor {
  public:
    RfrModel() = default;
    static std::unique_ptr<RfrModel> fit(const RfrConfig& config, const Matrix& inputs,
                                         const Matrix& targets);

    RegressorKind kind() const override { return RegressorKind::rfr; }
    int input_dim() const override { return input_dim_; }
    int output_dim() const override { return output_dim_; }
    Matrix predict(const Matrix& inputs) const override;
    void save_payload(std::ostream& os) const override;
    static std::unique_ptr<RfrModel> load_payload(std::istream& is);

    double oob_mse() const { return oob_mse_; }

  private:
    std::vector<Tree> trees_;
    int input_dim_ = 0, output_dim_ = 0;
    double oob_mse_ = 0.0;  // NaN when bootstrap was off
};

class HptModel final : public Regressor {
  public:
    HptModel() = default;
    static std::unique_ptr<HptModel> fit(const HptConfig& config, const Matrix& inputs,
                                         const Matrix& targets);

    RegressorKind kind() const override { return RegressorKind::hpt; }
    int input_dim() const override { return int(train_inputs_.cols()); }
    int output_dim() const override { return int(train_targets_.cols()); }
    Matrix predict(const Matrix& inputs) const override;
    void save_payload(std::ostream& os) const override;
    static std::unique_ptr<HptModel> load_payload(std::istream& is);

  private:
    void build_index();

    Standardizer in_std_, out_std_;
    Matrix train_inputs_;   // standardized, M x P
    Matrix train_targets_;  // standardized, M x Q
    HptConfig config_;
    // kd-tree over train_inputs_, built only above the brute-force cutoff
    std::vector<int> kd_nodes_;  // median-ordered permutation; empty = brute force
    std::vector<int> kd_axis_;
};

constexpr std::size_t kHptBruteForceLimit = 50000;

}  // namespace hcd::detail
