#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "hcd/image.hpp"

namespace hcd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class RegressorKind : std::uint8_t { gpr = 0, svr = 1, rfr = 2, hpt = 3 };

std::string to_string(RegressorKind kind);
RegressorKind regressor_kind_from_string(const std::string& name);

struct GprConfig {
    double signal_variance = 1.0;
    double length_scale = 1.0;
    double jitter = 1e-6;  // relative to signal variance
    int optimizer_steps = 1;
};

struct SvrConfig {
    double lambda = 1.0;
    double epsilon = 0.1;
    double rbf_width = 1.0;
    int max_iterations = 500;
    double convergence_tol = 1e-8;
};

struct RfrConfig {
    int num_trees = 64;
    int features_per_node = 0;  // 0 = floor(P/3), at least 1
    int min_leaf_size = 1;
    bool bootstrap = true;
    std::uint64_t rng_seed = 0;
};

struct HptConfig {
    enum class Normalization : std::uint8_t { absolute = 0, relative = 1 };
    int num_neighbors = 50;
    double kernel_decay = 100.0;
    Normalization normalization = Normalization::absolute;
};

struct RegressorConfig {
    RegressorKind kind = RegressorKind::rfr;
    GprConfig gpr;
    SvrConfig svr;
    RfrConfig rfr;
    HptConfig hpt;
    // Kernel-matrix methods refuse to fit above this many training samples.
    std::size_t memory_cap = 20000;
};

/// Per-column z-score transform fitted on training data; constant columns
/// keep unit scale.
struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const Matrix& data);
    Matrix apply(const Matrix& data) const;
    Matrix invert(const Matrix& data) const;
};

class Regressor {
  public:
    virtual ~Regressor() = default;
    virtual RegressorKind kind() const = 0;
    virtual int input_dim() const = 0;
    virtual int output_dim() const = 0;
    virtual Matrix predict(const Matrix& inputs) const = 0;
    virtual void save_payload(std::ostream& os) const = 0;
};

/// Fits the configured regressor on rows of (inputs -> targets).
std::unique_ptr<Regressor> fit_regressor(const RegressorConfig& config, const Matrix& inputs,
                                         const Matrix& targets);

/// Self-describing binary blob: magic "HCDR1", kind byte, payload.
void save_regressor(const Regressor& model, std::ostream& os);
std::unique_ptr<Regressor> load_regressor(std::istream& is);

struct PredictedImage {
    ImageStack image;
    RegressorKind regressor;
    std::string direction;  // "x_to_y" or "y_to_x"
};

struct TwoWayPrediction {
    PredictedImage y_hat;  // X -> Y regression applied to every pixel of X
    PredictedImage x_hat;  // Y -> X regression applied to every pixel of Y
};

TwoWayPrediction regress_both_ways(const ImageStack& img_x, const ImageStack& img_y,
                                   const TrainingSet& trainset, const RegressorConfig& config);

// --- GPR internals, exposed for direct verification -------------------------

struct GprTheta {
    double log_signal_variance = 0.0;
    double log_length_scale = 0.0;
};

struct GprLmlResult {
    double lml = 0.0;
    double d_log_signal_variance = 0.0;
    double d_log_length_scale = 0.0;
};

/// Log marginal likelihood of the RBF-kernel GP (summed over target columns)
/// and its analytic gradient in log-parameter space.
GprLmlResult gpr_log_marginal_likelihood(const Matrix& inputs, const Matrix& targets,
                                         const GprTheta& theta, double jitter_rel);

/// Monotone gradient ascent on the log marginal likelihood (backtracking
/// line search; steps = 0 returns theta unchanged).
GprTheta optimize_gpr_hyperparameters(const Matrix& inputs, const Matrix& targets,
                                      const GprTheta& initial, int steps,
                                      double jitter_rel = 1e-6);

// --- SVR internals, exposed for direct verification -------------------------

struct SvrFitDetail {
    Matrix beta;                      // M x Q kernel-expansion coefficients
    Vector bias;                      // Q
    std::vector<double> cost_history; // cost after each accepted iteration
    std::vector<int> support_vectors; // training indices with residual >= epsilon
    bool converged = true;
};

/// Minimises the MIMO-SVR cost 0.5*tr(B' K B) + lambda * sum L(mu_m) over the
/// kernel expansion, on already-standardized data.
SvrFitDetail fit_svr_detail(const Matrix& inputs, const Matrix& targets, const SvrConfig& config);

/// Cost of a given (beta, bias) under the MIMO-SVR objective.
double svr_cost(const Matrix& inputs, const Matrix& targets, const Matrix& beta,
                const Vector& bias, const SvrConfig& config);

// --- RFR internals -----------------------------------------------------------

class RfrModel;
/// Out-of-bag mean squared error recorded at fit time (bootstrap only).
double rfr_oob_mse(const Regressor& model);

}  // namespace hcd
