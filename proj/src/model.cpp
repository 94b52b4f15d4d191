#include "hre/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hre/errors.hpp"
#include "hre/quadrature.hpp"

namespace hre {

namespace {

constexpr double kMaxLogRatio = 700.0;

void require_sigma2(double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw DomainError("sigma2 must be positive and finite, got " + std::to_string(sigma2));
}

}  // namespace

PanelDataset::PanelDataset(std::vector<Group> groups) : groups_(std::move(groups)) {
    if (groups_.empty()) throw DomainError("PanelDataset: no groups");
    p_ = groups_.front().design.cols();
    if (p_ == 0) throw DomainError("PanelDataset: design has no columns");
    for (const Group& g : groups_) {
        if (g.responses.empty()) throw DomainError("PanelDataset: group '" + g.id + "' is empty");
        if (g.design.rows() != g.responses.size() || g.design.cols() != p_)
            throw DomainError("PanelDataset: group '" + g.id + "' design is " +
                              std::to_string(g.design.rows()) + "x" +
                              std::to_string(g.design.cols()) + ", expected " +
                              std::to_string(g.responses.size()) + "x" + std::to_string(p_));
        for (std::size_t j = 0; j < g.responses.size(); ++j) {
            const double y = g.responses[j];
            if (!(y > 0.0) || !std::isfinite(y))
                throw DomainError("PanelDataset: group '" + g.id + "' response " +
                                  std::to_string(j) + " is not strictly positive");
        }
        n_ += g.responses.size();
    }
}

std::size_t PanelDataset::min_group_size() const {
    std::size_t m = groups_.front().size();
    for (const Group& g : groups_) m = std::min(m, g.size());
    return m;
}

double normalize_constant() {
    // int_0^inf e^{-t-1/t}/t dt = int_R e^{-2 cosh s} ds = 2 K_0(2).
    static const double c = [] {
        const QuadratureResult r = integrate_1d(
            [](double s) { return std::exp(-2.0 * std::cosh(s)); }, 0.0, 1.0 / std::sqrt(2.0),
            1e-14);
        return 1.0 / (std::exp(2.0) * r.value);
    }();
    return c;
}

double error_log_density(double t) {
    if (!(t > 0.0)) throw DomainError("error_log_density: t must be positive");
    return std::log(normalize_constant()) - t - 1.0 / t - std::log(t) + 2.0;
}

double log_ratio(double log_y, double eta) {
    const double lt = log_y - eta;
    if (!(std::abs(lt) <= kMaxLogRatio))
        throw OverflowError("|log y - eta| = " + std::to_string(std::abs(lt)) +
                            " exceeds the representable range");
    return lt;
}

double cond_log_density_kernel(double y, double eta) {
    if (!(y > 0.0)) throw DomainError("cond_log_density_kernel: y must be positive");
    const double t = std::exp(log_ratio(std::log(y), eta));
    return -(t + 1.0 / t);
}

double relative_error_product(double y, double eta) {
    if (!(y > 0.0)) throw DomainError("relative_error_product: y must be positive");
    const double mu = std::exp(eta);
    const double diff = std::abs(y - mu);
    return (diff / y) * (diff / mu);
}

std::vector<double> linear_predictor(const Group& group, std::span<const double> beta) {
    if (beta.size() != group.design.cols())
        throw DimensionMismatch("linear_predictor: beta has length " +
                                std::to_string(beta.size()) + ", design has " +
                                std::to_string(group.design.cols()) + " columns");
    return group.design * beta;
}

double group_h_likelihood(const Group& group, std::span<const double> beta, double sigma2,
                          double nu) {
    require_sigma2(sigma2);
    const std::vector<double> eta = linear_predictor(group, beta);
    double s = 0.0;
    for (std::size_t j = 0; j < group.size(); ++j) {
        const double t = std::exp(log_ratio(std::log(group.responses[j]), eta[j] + nu));
        s -= t + 1.0 / t;
    }
    return s - 0.5 * std::log(sigma2) - nu * nu / (2.0 * sigma2);
}

double h_likelihood(const PanelDataset& data, const ModelParams& params,
                    const RandomEffects& nu) {
    if (nu.nu.size() != data.num_groups())
        throw DimensionMismatch("h_likelihood: need one random effect per group");
    double total = 0.0;
    for (std::size_t i = 0; i < data.num_groups(); ++i)
        total += group_h_likelihood(data.group(i), params.beta, params.sigma2, nu.nu[i]);
    return total;
}

double h_likelihood_constant(const PanelDataset& data) {
    double sum_log_y = 0.0;
    for (const Group& g : data.groups())
        for (double y : g.responses) sum_log_y += std::log(y);
    const double n = static_cast<double>(data.num_observations());
    const double k = static_cast<double>(data.num_groups());
    return n * (std::log(normalize_constant()) + 2.0) - sum_log_y -
           0.5 * k * std::log(2.0 * std::numbers::pi);
}

DerivBundle nu_derivatives(const Group& group, std::span<const double> beta, double sigma2,
                           double nu, int order) {
    if (order < 1 || order > 4) throw DomainError("nu_derivatives: order must be 1..4");
    require_sigma2(sigma2);
    const std::vector<double> eta = linear_predictor(group, beta);
    double sum_diff = 0.0;  // sum (t - 1/t)
    double sum_sum = 0.0;   // sum (t + 1/t)
    for (std::size_t j = 0; j < group.size(); ++j) {
        const double t = std::exp(log_ratio(std::log(group.responses[j]), eta[j] + nu));
        const double inv = 1.0 / t;
        sum_diff += t - inv;
        sum_sum += t + inv;
    }
    DerivBundle d;
    d.value = -sum_sum - 0.5 * std::log(sigma2) - nu * nu / (2.0 * sigma2);
    d.h1 = sum_diff - nu / sigma2;
    if (order >= 2) d.h2 = -sum_sum - 1.0 / sigma2;
    if (order >= 3) d.h3 = sum_diff;
    if (order >= 4) d.h4 = -sum_sum;
    return d;
}

std::vector<double> beta_gradient(const PanelDataset& data, const ModelParams& params,
                                  const RandomEffects& nu) {
    if (nu.nu.size() != data.num_groups())
        throw DimensionMismatch("beta_gradient: need one random effect per group");
    const std::size_t p = data.num_covariates();
    if (params.beta.size() != p) throw DimensionMismatch("beta_gradient: beta length");
    std::vector<double> grad(p, 0.0);
    for (std::size_t i = 0; i < data.num_groups(); ++i) {
        const Group& g = data.group(i);
        const std::vector<double> eta = linear_predictor(g, params.beta);
        for (std::size_t j = 0; j < g.size(); ++j) {
            const double t = std::exp(log_ratio(std::log(g.responses[j]), eta[j] + nu.nu[i]));
            const double r = t - 1.0 / t;
            const auto x = g.design.row(j);
            for (std::size_t a = 0; a < p; ++a) grad[a] += r * x[a];
        }
    }
    return grad;
}

ArrowheadSpd negated_joint_hessian(const PanelDataset& data, std::span<const double> beta,
                                   double sigma2, std::span<const double> nu) {
    require_sigma2(sigma2);
    const std::size_t p = data.num_covariates();
    const std::size_t k = data.num_groups();
    if (nu.size() != k) throw DimensionMismatch("joint Hessian: need one random effect per group");
    ArrowheadSpd m{DenseMatrix(p, p), DenseMatrix(p, k), std::vector<double>(k, 0.0)};
    for (std::size_t i = 0; i < k; ++i) {
        const Group& g = data.group(i);
        const std::vector<double> eta = linear_predictor(g, beta);
        double d = 1.0 / sigma2;
        for (std::size_t j = 0; j < g.size(); ++j) {
            const double t = std::exp(log_ratio(std::log(g.responses[j]), eta[j] + nu[i]));
            const double w = t + 1.0 / t;
            const auto x = g.design.row(j);
            d += w;
            for (std::size_t a = 0; a < p; ++a) {
                m.cross(a, i) += w * x[a];
                for (std::size_t b = 0; b <= a; ++b) m.corner(a, b) += w * x[a] * x[b];
            }
        }
        m.diag[i] = d;
    }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < a; ++b) m.corner(b, a) = m.corner(a, b);
    return m;
}

JointHessian joint_hessian(const PanelDataset& data, const ModelParams& params,
                           const RandomEffects& nu) {
    const ArrowheadSpd neg = negated_joint_hessian(data, params.beta, params.sigma2, nu.nu);
    JointHessian h{neg.corner, neg.cross, neg.diag};
    for (std::size_t a = 0; a < h.beta_beta.rows(); ++a)
        for (std::size_t b = 0; b < h.beta_beta.cols(); ++b) h.beta_beta(a, b) = -h.beta_beta(a, b);
    for (std::size_t a = 0; a < h.beta_nu.rows(); ++a)
        for (std::size_t b = 0; b < h.beta_nu.cols(); ++b) h.beta_nu(a, b) = -h.beta_nu(a, b);
    for (double& v : h.nu_nu) v = -v;
    return h;
}

}  // namespace hre
