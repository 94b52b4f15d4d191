#include "hre/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hre/errors.hpp"
#include "hre/optimize.hpp"
#include "hre/quadrature.hpp"

namespace hre {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> offsets_of(const Group& group, std::span<const double> beta) {
    std::vector<double> a = linear_predictor(group, beta);
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = log_ratio(std::log(group.responses[j]), a[j]);
    return a;
}

// sum (t - 1/t) and sum (t + 1/t) with t_j = exp(a_j - nu).
struct TSums {
    double diff = 0.0;
    double sum = 0.0;
};

TSums t_sums(std::span<const double> offsets, double nu) {
    TSums s;
    for (double a : offsets) {
        const double t = std::exp(log_ratio(a, nu));
        const double inv = 1.0 / t;
        s.diff += t - inv;
        s.sum += t + inv;
    }
    return s;
}

// Kernel-convention h_i as a function of nu, from offsets.
double h_from_offsets(std::span<const double> offsets, double sigma2, double nu) {
    return -t_sums(offsets, nu).sum - 0.5 * std::log(sigma2) - nu * nu / (2.0 * sigma2);
}

LaplaceReport report_at(std::span<const double> offsets, double sigma2, double nu_hat) {
    const TSums s = t_sums(offsets, nu_hat);
    LaplaceReport r;
    r.h_at_mode = -s.sum - 0.5 * std::log(sigma2) - nu_hat * nu_hat / (2.0 * sigma2);
    r.curvature = s.sum + 1.0 / sigma2;
    r.tau2 = 1.0 / r.curvature;
    r.h3 = s.diff;
    r.h4 = -s.sum;
    r.first_order_logm = laplace_adjust(r.h_at_mode, r.curvature);
    r.correction = laplace_correction(-r.curvature, r.h3, r.h4);
    r.second_order_logm = r.correction < 1.0 ? r.first_order_logm + std::log1p(-r.correction)
                                             : -INFINITY;
    return r;
}

void require_positive_sigma2(double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw DomainError("sigma2 must be positive and finite");
}

}  // namespace

double profile_nu_offsets(std::span<const double> offsets, double sigma2) {
    require_positive_sigma2(sigma2);
    double lo = 0.0, hi = 0.0;
    for (double a : offsets) {
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    // f and f' are requested at the same point in turn; cache the sums.
    double cached_nu = NAN;
    TSums cached;
    auto sums_at = [&](double nu) -> const TSums& {
        if (nu != cached_nu) {
            cached = t_sums(offsets, nu);
            cached_nu = nu;
        }
        return cached;
    };
    if (lo == hi) return lo;
    // h1 and h2 divided by their typical magnitude so one tolerance bounds
    // both the residual and the bracket width in nu.
    const double scale = 2.0 * static_cast<double>(offsets.size()) + 1.0 / sigma2;
    auto h1 = [&](double nu) { return (sums_at(nu).diff - nu / sigma2) / scale; };
    auto h2 = [&](double nu) { return (-sums_at(nu).sum - 1.0 / sigma2) / scale; };
    return find_root_1d(h1, {lo, hi}, 1e-14, h2);
}

NuProfile profile_nu(const Group& group, std::span<const double> beta, double sigma2) {
    const std::vector<double> a = offsets_of(group, beta);
    NuProfile out;
    out.nu_hat = profile_nu_offsets(a, sigma2);
    out.report = report_at(a, sigma2, out.nu_hat);
    return out;
}

double laplace_adjust(double l_value, double curvature) {
    if (!(curvature > 0.0))
        throw NonPositiveCurvature("laplace_adjust: curvature " + std::to_string(curvature) +
                                   " is not positive");
    return l_value - 0.5 * std::log(curvature / kTwoPi);
}

double laplace_correction(double h2, double h3, double h4) {
    const double j1 = -h4 / (h2 * h2);
    const double j2 = -(h3 * h3) / (h2 * h2 * h2);
    return j1 / 8.0 - 5.0 * j2 / 24.0;
}

double marginal_loglik_laplace(const PanelDataset& data, const ModelParams& params,
                               LaplaceOrder order) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.num_groups(); ++i) {
        const NuProfile prof = profile_nu(data.group(i), params.beta, params.sigma2);
        total += prof.report.first_order_logm;
        if (order == LaplaceOrder::Second) {
            if (!(prof.report.correction < 1.0))
                throw CorrectionTooLarge("group '" + data.group(i).id + "': C = " +
                                         std::to_string(prof.report.correction) + " >= 1");
            total += std::log1p(-prof.report.correction);
        }
    }
    return total + h_likelihood_constant(data);
}

double group_log_marginal_quadrature(const Group& group, std::span<const double> beta,
                                     double sigma2, double rel_tol) {
    const std::vector<double> a = offsets_of(group, beta);
    const double nu_hat = profile_nu_offsets(a, sigma2);
    const LaplaceReport r = report_at(a, sigma2, nu_hat);
    const double h_max = r.h_at_mode;
    const QuadratureResult q = integrate_1d(
        [&](double nu) { return std::exp(h_from_offsets(a, sigma2, nu) - h_max); }, nu_hat,
        std::sqrt(r.tau2), rel_tol);
    return h_max + std::log(q.value);
}

double marginal_loglik_quadrature(const PanelDataset& data, const ModelParams& params,
                                  double rel_tol) {
    double total = 0.0;
    for (const Group& g : data.groups())
        total += group_log_marginal_quadrature(g, params.beta, params.sigma2, rel_tol);
    return total + h_likelihood_constant(data);
}

namespace {

// Unnormalised posterior density exp(h(nu) - h(nu_hat)) and its window.
struct PosteriorKernel {
    std::vector<double> offsets;
    double sigma2;
    double nu_hat;
    double h_max;
    double sd;

    PosteriorKernel(const Group& group, std::span<const double> beta, double s2)
        : offsets(offsets_of(group, beta)), sigma2(s2) {
        nu_hat = profile_nu_offsets(offsets, sigma2);
        const LaplaceReport r = report_at(offsets, sigma2, nu_hat);
        h_max = r.h_at_mode;
        sd = std::sqrt(r.tau2);
    }

    double operator()(double nu) const { return std::exp(h_from_offsets(offsets, sigma2, nu) - h_max); }

    Interval left() const { return {nu_hat - 12.0 * sd, nu_hat}; }
    Interval right() const { return {nu_hat, nu_hat + 12.0 * sd}; }
};

constexpr double kMomentTol = 1e-12;

}  // namespace

PosteriorApprox posterior_moments_quadrature(const Group& group, std::span<const double> beta,
                                             double sigma2) {
    const PosteriorKernel w(group, beta, sigma2);
    auto integrate_both = [&](const ScalarFn& f) {
        return integrate_gk(f, w.left(), kMomentTol).value +
               integrate_gk(f, w.right(), kMomentTol).value;
    };
    const double z = integrate_both(w);
    // Signed first moment as a difference of two positive integrals.
    const double right = integrate_gk([&](double nu) { return (nu - w.nu_hat) * w(nu); },
                                      w.right(), kMomentTol)
                             .value;
    const double left = integrate_gk([&](double nu) { return (w.nu_hat - nu) * w(nu); }, w.left(),
                                     kMomentTol)
                            .value;
    PosteriorApprox out;
    out.mean = w.nu_hat + (right - left) / z;
    const double m = out.mean;
    out.variance = integrate_both([&](double nu) { return (nu - m) * (nu - m) * w(nu); }) / z;
    return out;
}

PosteriorApprox posterior_normal_approx(const Group& group, std::span<const double> beta,
                                        double sigma2) {
    const NuProfile prof = profile_nu(group, beta, sigma2);
    return {prof.nu_hat, prof.report.tau2};
}

double posterior_tv_gap(const Group& group, std::span<const double> beta, double sigma2) {
    const PosteriorKernel w(group, beta, sigma2);
    const double z = integrate_gk(w, w.left(), kMomentTol).value +
                     integrate_gk(w, w.right(), kMomentTol).value;
    const double sd = w.sd;
    auto diff = [&](double nu) {
        const double u = (nu - w.nu_hat) / sd;
        const double normal = std::exp(-0.5 * u * u) / (sd * std::sqrt(kTwoPi));
        return std::abs(w(nu) / z - normal);
    };
    // Absolute differences have kinks; a looser tolerance keeps the panel
    // count bounded while staying far below the gaps being measured.
    return 0.5 * (integrate_gk(diff, w.left(), 1e-7).value +
                  integrate_gk(diff, w.right(), 1e-7).value);
}

std::vector<double> marginal_beta_gradient_quadrature(const PanelDataset& data,
                                                      std::span<const double> beta,
                                                      double sigma2) {
    const std::size_t p = data.num_covariates();
    std::vector<double> grad(p, 0.0);
    for (const Group& g : data.groups()) {
        const PosteriorKernel w(g, beta, sigma2);
        auto integrate_both = [&](const ScalarFn& f) {
            return integrate_gk(f, w.left(), kMomentTol).value +
                   integrate_gk(f, w.right(), kMomentTol).value;
        };
        const double z = integrate_both(w);
        // E[e^{-(nu - nu_hat)}] and E[e^{nu - nu_hat}]
        const double e_minus =
            integrate_both([&](double nu) { return std::exp(-(nu - w.nu_hat)) * w(nu); }) / z;
        const double e_plus =
            integrate_both([&](double nu) { return std::exp(nu - w.nu_hat) * w(nu); }) / z;
        for (std::size_t j = 0; j < g.size(); ++j) {
            const double a = w.offsets[j] - w.nu_hat;
            const double up = std::exp(a) * e_minus;
            const double down = std::exp(-a) * e_plus;
            const auto x = g.design.row(j);
            for (std::size_t k = 0; k < p; ++k) grad[k] += (up - down) * x[k];
        }
    }
    return grad;
}

MarginalMaximum maximize_marginal_quadrature(const PanelDataset& data, double sigma2,
                                             std::span<const double> beta_start, double grad_tol,
                                             int max_iter) {
    MarginalMaximum out;
    out.beta.assign(beta_start.begin(), beta_start.end());
    ModelParams params{out.beta, sigma2, Sigma2Mode::Known};
    out.loglik = marginal_loglik_quadrature(data, params);
    for (int it = 0; it < max_iter; ++it) {
        out.iterations = it + 1;
        const std::vector<double> grad = marginal_beta_gradient_quadrature(data, out.beta, sigma2);
        if (max_abs(grad) <= grad_tol) break;
        // Curvature of the nu-profiled h-likelihood, which agrees with that of
        // m up to O(1) terms: a good quasi-Newton metric.
        std::vector<double> nu_hat(data.num_groups());
        for (std::size_t i = 0; i < data.num_groups(); ++i)
            nu_hat[i] = profile_nu(data.group(i), out.beta, sigma2).nu_hat;
        const DenseMatrix s = negated_joint_hessian(data, out.beta, sigma2, nu_hat).schur_complement();
        const std::vector<double> step = solve_spd(s, grad);
        double alpha = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 30; ++halving, alpha *= 0.5) {
            std::vector<double> trial = out.beta;
            for (std::size_t k = 0; k < trial.size(); ++k) trial[k] += alpha * step[k];
            params.beta = trial;
            const double value = marginal_loglik_quadrature(data, params);
            // Accept non-decrease up to quadrature noise.
            if (value >= out.loglik - 1e-10 * std::abs(out.loglik)) {
                out.beta = std::move(trial);
                out.loglik = value;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    return out;
}

}  // namespace hre
