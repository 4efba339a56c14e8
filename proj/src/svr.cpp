#include <cmath>
#include <stdexcept>

#include "binio.hpp"
#include "hcd/parallel.hpp"
#include "regressors_impl.hpp"

namespace hcd {
namespace {

// Epsilon-insensitive quadratic loss on the residual norm (0 below epsilon,
// (mu - eps)^2 above), summed over training samples.
double loss_sum(const Matrix& residuals, double epsilon) {
    double total = 0.0;
    for (Eigen::Index m = 0; m < residuals.rows(); ++m) {
        const double mu = residuals.row(m).norm();
        if (mu >= epsilon) {
            const double t = mu - epsilon;
            total += t * t;
        }
    }
    return total;
}

double cost_of(const Matrix& kernel, const Matrix& targets, const Matrix& beta,
               const Vector& bias, const SvrConfig& config) {
    const Matrix pred = kernel * beta + Vector::Ones(kernel.rows()) * bias.transpose();
    const double reg = 0.5 * (beta.array() * (kernel * beta).array()).sum();
    return reg + config.lambda * loss_sum(targets - pred, config.epsilon);
}

}  // namespace

double svr_cost(const Matrix& inputs, const Matrix& targets, const Matrix& beta,
                const Vector& bias, const SvrConfig& config) {
    const Matrix kernel = detail::rbf_kernel(inputs, inputs, 1.0, config.rbf_width);
    return cost_of(kernel, targets, beta, bias, config);
}

SvrFitDetail fit_svr_detail(const Matrix& inputs, const Matrix& targets, const SvrConfig& config) {
    const auto m = inputs.rows();
    const auto q = targets.cols();
    const Matrix kernel = detail::rbf_kernel(inputs, inputs, 1.0, config.rbf_width);

    SvrFitDetail detail;
    detail.beta = Matrix::Zero(m, q);
    detail.bias = targets.colwise().mean();

    double cost = cost_of(kernel, targets, detail.beta, detail.bias, config);
    detail.cost_history.push_back(cost);
    double step = 1.0 / (config.lambda * double(m) + 1.0);
    detail.converged = false;

    for (int it = 0; it < config.max_iterations; ++it) {
        const Matrix pred = kernel * detail.beta + Vector::Ones(m) * detail.bias.transpose();
        const Matrix residuals = targets - pred;
        // dC/dpred: -2 lambda (mu - eps) e/mu on support vectors, 0 inside the tube
        Matrix grad_pred = Matrix::Zero(m, q);
        for (Eigen::Index r = 0; r < m; ++r) {
            const double mu = residuals.row(r).norm();
            if (mu >= config.epsilon && mu > 0.0)
                grad_pred.row(r) = -2.0 * config.lambda * (mu - config.epsilon) / mu *
                                   residuals.row(r);
        }
        const Matrix grad_beta = kernel * (detail.beta + grad_pred);
        const Vector grad_bias = grad_pred.colwise().sum();
        const double gnorm2 = grad_beta.squaredNorm() + grad_bias.squaredNorm();
        if (gnorm2 < 1e-18) {
            detail.converged = true;
            break;
        }
        // Backtracking line search keeps the cost monotone non-increasing.
        bool accepted = false;
        while (step > 1e-16) {
            const Matrix beta_try = detail.beta - step * grad_beta;
            const Vector bias_try = detail.bias - step * grad_bias;
            const double cost_try = cost_of(kernel, targets, beta_try, bias_try, config);
            if (cost_try <= cost) {
                const double rel = cost > 0.0 ? (cost - cost_try) / cost : 0.0;
                detail.beta = beta_try;
                detail.bias = bias_try;
                cost = cost_try;
                detail.cost_history.push_back(cost);
                accepted = true;
                step *= 1.5;
                if (rel < config.convergence_tol) detail.converged = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted || detail.converged) {
            detail.converged = detail.converged || !accepted;
            break;
        }
    }

    const Matrix pred = kernel * detail.beta + Vector::Ones(m) * detail.bias.transpose();
    for (Eigen::Index r = 0; r < m; ++r)
        if ((targets.row(r) - pred.row(r)).norm() >= config.epsilon)
            detail.support_vectors.push_back(int(r));
    return detail;
}

namespace detail {

std::unique_ptr<SvrModel> SvrModel::fit(const SvrConfig& config, const Matrix& inputs,
                                        const Matrix& targets, std::size_t memory_cap) {
    if (std::size_t(inputs.rows()) > memory_cap)
        throw std::runtime_error("kernel matrix exceeds memory budget");
    auto model = std::make_unique<SvrModel>();
    model->in_std_ = Standardizer::fit(inputs);
    model->out_std_ = Standardizer::fit(targets);
    model->train_inputs_ = model->in_std_.apply(inputs);
    model->rbf_width_ = config.rbf_width;
    SvrFitDetail detail =
        fit_svr_detail(model->train_inputs_, model->out_std_.apply(targets), config);
    model->beta_ = std::move(detail.beta);
    model->bias_ = std::move(detail.bias);
    model->support_vectors_ = std::move(detail.support_vectors);
    model->converged_ = detail.converged;
    return model;
}

Matrix SvrModel::predict(const Matrix& inputs) const {
    if (inputs.cols() != train_inputs_.cols())
        throw std::invalid_argument("svr predict: input width mismatch");
    Matrix out(inputs.rows(), beta_.cols());
    parallel_blocks(std::size_t(inputs.rows()), [&](std::size_t begin, std::size_t end) {
        const auto rows = Eigen::Index(end - begin);
        if (rows == 0) return;
        const Matrix block = in_std_.apply(inputs.middleRows(Eigen::Index(begin), rows));
        out.middleRows(Eigen::Index(begin), rows) =
            rbf_kernel(block, train_inputs_, 1.0, rbf_width_) * beta_ +
            Vector::Ones(rows) * bias_.transpose();
    });
    return out_std_.invert(out);
}

void SvrModel::save_payload(std::ostream& os) const {
    binio::write_vector(os, in_std_.mean);
    binio::write_vector(os, in_std_.scale);
    binio::write_vector(os, out_std_.mean);
    binio::write_vector(os, out_std_.scale);
    binio::write_matrix(os, train_inputs_);
    binio::write_matrix(os, beta_);
    binio::write_vector(os, bias_);
    binio::write_pod<double>(os, rbf_width_);
    binio::write_pod<std::uint64_t>(os, support_vectors_.size());
    for (int sv : support_vectors_) binio::write_pod<std::int32_t>(os, sv);
    binio::write_pod<std::uint8_t>(os, converged_ ? 1 : 0);
}

std::unique_ptr<SvrModel> SvrModel::load_payload(std::istream& is) {
    auto model = std::make_unique<SvrModel>();
    model->in_std_.mean = binio::read_vector(is);
    model->in_std_.scale = binio::read_vector(is);
    model->out_std_.mean = binio::read_vector(is);
    model->out_std_.scale = binio::read_vector(is);
    model->train_inputs_ = binio::read_matrix(is);
    model->beta_ = binio::read_matrix(is);
    model->bias_ = binio::read_vector(is);
    model->rbf_width_ = binio::read_pod<double>(is);
    const auto n_sv = binio::read_pod<std::uint64_t>(is);
    model->support_vectors_.resize(n_sv);
    for (auto& sv : model->support_vectors_) sv = binio::read_pod<std::int32_t>(is);
    model->converged_ = binio::read_pod<std::uint8_t>(is) != 0;
    return model;
}

}  // namespace detail
}  // namespace hcd
