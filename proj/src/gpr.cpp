#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

#include "binio.hpp"
#include "hcd/parallel.hpp"
#include "regressors_impl.hpp"

namespace hcd {
namespace detail {
namespace {

struct CholResult {
    Eigen::LLT<Matrix> llt;
    double jitter_used = 0.0;
};

// Cholesky of K + jitter*sf2*I, escalating the jitter x10 up to 1e-2 relative.
CholResult cholesky_with_escalation(const Matrix& kernel, double sf2, double jitter_rel) {
    double j = jitter_rel;
    while (true) {
        Matrix k = kernel;
        k.diagonal().array() += j * sf2;
        Eigen::LLT<Matrix> llt(k);
        if (llt.info() == Eigen::Success) return {std::move(llt), j};
        if (j >= 1e-2)
            throw std::runtime_error("gpr: kernel matrix singular even after jitter escalation");
        j = std::max(j * 10.0, 1e-12);
    }
}

Matrix squared_distances(const Matrix& a, const Matrix& b) {
    const Vector a2 = a.rowwise().squaredNorm();
    const Vector b2 = b.rowwise().squaredNorm();
    Matrix d2 = -2.0 * a * b.transpose();
    d2.colwise() += a2;
    d2.rowwise() += b2.transpose();
    return d2.cwiseMax(0.0);
}

}  // namespace

Matrix rbf_kernel(const Matrix& a, const Matrix& b, double sf2, double length_scale) {
    const double inv = -0.5 / (length_scale * length_scale);
    return (squared_distances(a, b) * inv).array().exp() * sf2;
}

std::unique_ptr<GprModel> GprModel::fit(const GprConfig& config, const Matrix& inputs,
                                        const Matrix& targets, std::size_t memory_cap) {
    if (std::size_t(inputs.rows()) > memory_cap)
        throw std::runtime_error("kernel matrix exceeds memory budget");
    auto model = std::make_unique<GprModel>();
    model->in_std_ = Standardizer::fit(inputs);
    model->out_std_ = Standardizer::fit(targets);
    model->train_inputs_ = model->in_std_.apply(inputs);
    model->jitter_rel_ = config.jitter;
    const Matrix y = model->out_std_.apply(targets);

    GprTheta theta{std::log(config.signal_variance), std::log(config.length_scale)};
    theta = optimize_gpr_hyperparameters(model->train_inputs_, y, theta,
                                         config.optimizer_steps, config.jitter);
    model->theta_ = theta;

    const double sf2 = std::exp(theta.log_signal_variance);
    const double ell = std::exp(theta.log_length_scale);
    const Matrix kernel = rbf_kernel(model->train_inputs_, model->train_inputs_, sf2, ell);
    auto chol = cholesky_with_escalation(kernel, sf2, config.jitter);
    model->alpha_ = chol.llt.solve(y);
    return model;
}

Matrix GprModel::predict(const Matrix& inputs) const {
    if (inputs.cols() != train_inputs_.cols())
        throw std::invalid_argument("gpr predict: input width mismatch");
    const double sf2 = std::exp(theta_.log_signal_variance);
    const double ell = std::exp(theta_.log_length_scale);
    Matrix out(inputs.rows(), alpha_.cols());
    parallel_blocks(std::size_t(inputs.rows()), [&](std::size_t begin, std::size_t end) {
        const auto rows = Eigen::Index(end - begin);
        if (rows == 0) return;
        const Matrix block = inputs.middleRows(Eigen::Index(begin), rows);
        out.middleRows(Eigen::Index(begin), rows) =
            rbf_kernel(in_std_.apply(block), train_inputs_, sf2, ell) * alpha_;
    });
    return out_std_.invert(out);
}

void GprModel::save_payload(std::ostream& os) const {
    binio::write_vector(os, in_std_.mean);
    binio::write_vector(os, in_std_.scale);
    binio::write_vector(os, out_std_.mean);
    binio::write_vector(os, out_std_.scale);
    binio::write_matrix(os, train_inputs_);
    binio::write_matrix(os, alpha_);
    binio::write_pod<double>(os, theta_.log_signal_variance);
    binio::write_pod<double>(os, theta_.log_length_scale);
    binio::write_pod<double>(os, jitter_rel_);
}

std::unique_ptr<GprModel> GprModel::load_payload(std::istream& is) {
    auto model = std::make_unique<GprModel>();
    model->in_std_.mean = binio::read_vector(is);
    model->in_std_.scale = binio::read_vector(is);
    model->out_std_.mean = binio::read_vector(is);
    model->out_std_.scale = binio::read_vector(is);
    model->train_inputs_ = binio::read_matrix(is);
    model->alpha_ = binio::read_matrix(is);
    model->theta_.log_signal_variance = binio::read_pod<double>(is);
    model->theta_.log_length_scale = binio::read_pod<double>(is);
    model->jitter_rel_ = binio::read_pod<double>(is);
    return model;
}

}  // namespace detail

GprLmlResult gpr_log_marginal_likelihood(const Matrix& inputs, const Matrix& targets,
                                         const GprTheta& theta, double jitter_rel) {
    const auto m = inputs.rows();
    const auto q = targets.cols();
    const double sf2 = std::exp(theta.log_signal_variance);
    const double ell = std::exp(theta.log_length_scale);

    const Matrix d2 = (inputs.rowwise().squaredNorm().replicate(1, m) +
                       inputs.rowwise().squaredNorm().transpose().replicate(m, 1) -
                       2.0 * inputs * inputs.transpose())
                          .cwiseMax(0.0);
    const Matrix kernel_bare = (d2 * (-0.5 / (ell * ell))).array().exp() * sf2;
    auto chol = detail::cholesky_with_escalation(kernel_bare, sf2, jitter_rel);

    const Matrix alpha = chol.llt.solve(targets);
    double log_det = 0.0;
    const auto& l = chol.llt.matrixLLT();
    for (Eigen::Index i = 0; i < m; ++i) log_det += std::log(l(i, i));

    GprLmlResult res;
    res.lml = -0.5 * (targets.array() * alpha.array()).sum() - double(q) * log_det -
              0.5 * double(q) * double(m) * std::log(2.0 * M_PI);

    // d(lml)/d(theta) = 0.5 * tr((alpha alpha' - Q Kinv) dK/dtheta)
    const Matrix kinv = chol.llt.solve(Matrix::Identity(m, m));
    const Matrix inner = alpha * alpha.transpose() - double(q) * kinv;
    // The jitter term scales with sf2, so dK/dlog(sf2) is the full matrix.
    Matrix k_full = kernel_bare;
    k_full.diagonal().array() += chol.jitter_used * sf2;
    res.d_log_signal_variance = 0.5 * (inner.array() * k_full.array()).sum();
    const Matrix dk_dlog_ell = kernel_bare.array() * d2.array() / (ell * ell);
    res.d_log_length_scale = 0.5 * (inner.array() * dk_dlog_ell.array()).sum();
    return res;
}

GprTheta optimize_gpr_hyperparameters(const Matrix& inputs, const Matrix& targets,
                                      const GprTheta& initial, int steps, double jitter_rel) {
    if (steps < 0) throw std::invalid_argument("optimize_gpr_hyperparameters: steps < 0");
    GprTheta theta = initial;
    if (steps == 0) return theta;
    GprLmlResult cur = gpr_log_marginal_likelihood(inputs, targets, theta, jitter_rel);
    double step = 0.1;
    for (int s = 0; s < steps; ++s) {
        const double gnorm = std::hypot(cur.d_log_signal_variance, cur.d_log_length_scale);
        if (gnorm < 1e-12) break;
        bool accepted = false;
        while (step > 1e-12) {
            GprTheta trial{theta.log_signal_variance + step * cur.d_log_signal_variance / gnorm,
                           theta.log_length_scale + step * cur.d_log_length_scale / gnorm};
            GprLmlResult next = gpr_log_marginal_likelihood(inputs, targets, trial, jitter_rel);
            if (next.lml >= cur.lml) {
                theta = trial;
                cur = next;
                accepted = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    return theta;
}

}  // namespace hcd
