#include "hcd/regression.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "binio.hpp"
#include "regressors_impl.hpp"

namespace hcd {

std::string to_string(RegressorKind kind) {
    switch (kind) {
        case RegressorKind::gpr: return "gpr";
        case RegressorKind::svr: return "svr";
        case RegressorKind::rfr: return "rfr";
        case RegressorKind::hpt: return "hpt";
    }
    throw std::logic_error("unknown regressor kind");
}

RegressorKind regressor_kind_from_string(const std::string& name) {
    if (name == "gpr") return RegressorKind::gpr;
    if (name == "svr") return RegressorKind::svr;
    if (name == "rfr") return RegressorKind::rfr;
    if (name == "hpt") return RegressorKind::hpt;
    throw std::invalid_argument("unknown regressor kind: " + name);
}

Standardizer Standardizer::fit(const Matrix& data) {
    Standardizer s;
    s.mean = data.colwise().mean();
    s.scale.resize(data.cols());
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
        const double var = (data.col(c).array() - s.mean(c)).square().sum() / double(data.rows());
        const double sd = std::sqrt(var);
        s.scale(c) = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Matrix Standardizer::apply(const Matrix& data) const {
    return (data.rowwise() - mean.transpose()).array().rowwise() /
           scale.transpose().array();
}

Matrix Standardizer::invert(const Matrix& data) const {
    return (data.array().rowwise() * scale.transpose().array()).matrix().rowwise() +
           mean.transpose();
}

std::unique_ptr<Regressor> fit_regressor(const RegressorConfig& config, const Matrix& inputs,
                                         const Matrix& targets) {
    if (inputs.rows() < 1 || inputs.rows() != targets.rows())
        throw std::invalid_argument("fit_regressor: bad training shapes");
    if (!inputs.allFinite() || !targets.allFinite())
        throw std::invalid_argument("fit_regressor: non-finite training data");
    switch (config.kind) {
        case RegressorKind::gpr:
            return detail::GprModel::fit(config.gpr, inputs, targets, config.memory_cap);
        case RegressorKind::svr:
            return detail::SvrModel::fit(config.svr, inputs, targets, config.memory_cap);
        case RegressorKind::rfr:
            return detail::RfrModel::fit(config.rfr, inputs, targets);
        case RegressorKind::hpt:
            return detail::HptModel::fit(config.hpt, inputs, targets);
    }
    throw std::logic_error("unknown regressor kind");
}

static constexpr const char kModelMagic[] = "HCDR1";

void save_regressor(const Regressor& model, std::ostream& os) {
    os.write(kModelMagic, 5);
    binio::write_pod<std::uint8_t>(os, std::uint8_t(model.kind()));
    model.save_payload(os);
}

std::unique_ptr<Regressor> load_regressor(std::istream& is) {
    binio::expect_magic(is, kModelMagic, "regressor blob");
    const auto kind = RegressorKind(binio::read_pod<std::uint8_t>(is));
    switch (kind) {
        case RegressorKind::gpr: return detail::GprModel::load_payload(is);
        case RegressorKind::svr: return detail::SvrModel::load_payload(is);
        case RegressorKind::rfr: return detail::RfrModel::load_payload(is);
        case RegressorKind::hpt: return detail::HptModel::load_payload(is);
    }
    throw std::runtime_error("regressor blob: unknown kind byte");
}

double rfr_oob_mse(const Regressor& model) {
    const auto* rfr = dynamic_cast<const detail::RfrModel*>(&model);
    if (!rfr) throw std::invalid_argument("rfr_oob_mse: not an RFR model");
    return rfr->oob_mse();
}

namespace {

Matrix image_as_matrix(const ImageStack& img) {
    Matrix m(Eigen::Index(img.num_pixels()), img.channels);
    for (std::size_t n = 0; n < img.num_pixels(); ++n)
        for (int c = 0; c < img.channels; ++c) m(Eigen::Index(n), c) = img.pixel(n)[c];
    return m;
}

ImageStack matrix_as_image(const Matrix& m, int n1, int n2, const std::string& tag) {
    ImageStack img(n1, n2, int(m.cols()), tag);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            img.data[std::size_t(r) * m.cols() + c] = m(r, c);
    return img;
}

Matrix trainset_side(const TrainingSet& ts, bool x_side) {
    const int dim = x_side ? ts.dim_x() : ts.dim_y();
    Matrix m(Eigen::Index(ts.size()), dim);
    for (std::size_t r = 0; r < ts.size(); ++r) {
        const auto& vec = x_side ? ts.pairs[r].x : ts.pairs[r].y;
        for (int c = 0; c < dim; ++c) m(Eigen::Index(r), c) = vec[c];
    }
    return m;
}

}  // namespace

TwoWayPrediction regress_both_ways(const ImageStack& img_x, const ImageStack& img_y,
                                   const TrainingSet& trainset, const RegressorConfig& config) {
    if (trainset.size() == 0) throw std::invalid_argument("regress_both_ways: empty training set");
    if (trainset.dim_x() != img_x.channels || trainset.dim_y() != img_y.channels)
        throw std::invalid_argument("regress_both_ways: training set does not match images");

    const Matrix xs = trainset_side(trainset, true);
    const Matrix ys = trainset_side(trainset, false);

    const auto forward = fit_regressor(config, xs, ys);   // f1: X -> Y
    const auto backward = fit_regressor(config, ys, xs);  // f2: Y -> X

    TwoWayPrediction result;
    result.y_hat = {matrix_as_image(forward->predict(image_as_matrix(img_x)), img_x.height,
                                    img_x.width, img_y.modality_tag),
                    config.kind, "x_to_y"};
    result.x_hat = {matrix_as_image(backward->predict(image_as_matrix(img_y)), img_y.height,
                                    img_y.width, img_x.modality_tag),
                    config.kind, "y_to_x"};
    return result;
}

}  // namespace hcd
