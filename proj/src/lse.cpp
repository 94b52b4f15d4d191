#include "hre/lse.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hre/errors.hpp"
#include "hre/optimize.hpp"

namespace hre {

namespace {

struct GlsSystem {
    DenseMatrix xtvx;
    std::vector<double> xtvy;
};

// X^T Sigma^{-1} X and X^T Sigma^{-1} log Y, accumulated group by group.
GlsSystem gls_system(const PanelDataset& data, double sigma2, double phi) {
    const std::size_t p = data.num_covariates();
    const double phi2 = phi * phi;
    GlsSystem sys{DenseMatrix(p, p), std::vector<double>(p, 0.0)};
    std::vector<double> colsum(p);
    for (const Group& g : data.groups()) {
        const double n = static_cast<double>(g.size());
        const double gamma = sigma2 / (phi2 + n * sigma2);
        std::fill(colsum.begin(), colsum.end(), 0.0);
        double ysum = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            const auto x = g.design.row(j);
            const double ly = std::log(g.responses[j]);
            ysum += ly;
            for (std::size_t a = 0; a < p; ++a) {
                colsum[a] += x[a];
                sys.xtvy[a] += x[a] * ly / phi2;
                for (std::size_t b = 0; b < p; ++b) sys.xtvx(a, b) += x[a] * x[b] / phi2;
            }
        }
        for (std::size_t a = 0; a < p; ++a) {
            sys.xtvy[a] -= gamma * colsum[a] * ysum / phi2;
            for (std::size_t b = 0; b < p; ++b) sys.xtvx(a, b) -= gamma * colsum[a] * colsum[b] / phi2;
        }
    }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < a; ++b) {
            const double m = 0.5 * (sys.xtvx(a, b) + sys.xtvx(b, a));
            sys.xtvx(a, b) = m;
            sys.xtvx(b, a) = m;
        }
    return sys;
}

void require_phi(double phi) {
    if (!(phi > 0.0)) throw DomainError("LSE: phi must be positive");
}

}  // namespace

std::vector<double> lse_gls_beta(const PanelDataset& data, double sigma2, double phi) {
    require_phi(phi);
    if (!(sigma2 >= 0.0)) throw DomainError("LSE: sigma2 must be non-negative");
    const GlsSystem sys = gls_system(data, sigma2, phi);
    try {
        return solve_spd(sys.xtvx, sys.xtvy);
    } catch (const NotPositiveDefinite&) {
        throw DegenerateDesign("X^T Sigma^{-1} X is singular");
    }
}

double lse_profile_loglik(const PanelDataset& data, double sigma2, double phi) {
    const std::vector<double> beta = lse_gls_beta(data, sigma2, phi);
    const double phi2 = phi * phi;
    double ll = 0.0;
    for (const Group& g : data.groups()) {
        const double n = static_cast<double>(g.size());
        const double gamma = sigma2 / (phi2 + n * sigma2);
        const std::vector<double> eta = linear_predictor(g, beta);
        double ss = 0.0, sum = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            const double r = std::log(g.responses[j]) - eta[j];
            ss += r * r;
            sum += r;
        }
        // r^T Sigma_i^{-1} r and log det Sigma_i = (n-1) log phi^2 + log(phi^2 + n sigma2)
        const double quad = (ss - gamma * sum * sum) / phi2;
        const double logdet = (n - 1.0) * std::log(phi2) + std::log(phi2 + n * sigma2);
        ll -= 0.5 * (n * std::log(2.0 * std::numbers::pi) + logdet + quad);
    }
    return ll;
}

LseFit lse_fit(const PanelDataset& data, const LseConfig& config) {
    require_phi(config.phi);
    LseFit out;
    out.phi = config.phi;
    if (config.sigma2_mode == Sigma2Mode::Known) {
        if (!(config.sigma2_known >= 0.0)) throw DomainError("LSE: known sigma2 must be >= 0");
        out.sigma2_hat = config.sigma2_known;
    } else {
        const Maximum1d best = maximize_golden(
            [&](double s) { return lse_profile_loglik(data, std::exp(s), config.phi); },
            {config.log_sigma2_lo, config.log_sigma2_hi}, 1e-9);
        out.sigma2_hat = std::exp(best.x);
        out.sigma2_bound_hit = best.at_lower_bound || best.at_upper_bound;
    }

    const double phi2 = config.phi * config.phi;
    const GlsSystem sys = gls_system(data, out.sigma2_hat, config.phi);
    try {
        out.beta_hat = solve_spd(sys.xtvx, sys.xtvy);
        const DenseMatrix cov = inverse_spd(sys.xtvx);
        for (std::size_t a = 0; a < cov.rows(); ++a) out.se_beta.push_back(std::sqrt(cov(a, a)));
    } catch (const NotPositiveDefinite&) {
        throw DegenerateDesign("X^T Sigma^{-1} X is singular");
    }
    out.loglik = lse_profile_loglik(data, out.sigma2_hat, config.phi);

    for (const Group& g : data.groups()) {
        const double n = static_cast<double>(g.size());
        const std::vector<double> eta = linear_predictor(g, out.beta_hat);
        double mean = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) mean += std::log(g.responses[j]) - eta[j];
        mean /= n;
        const double shrink = n * out.sigma2_hat / (phi2 + n * out.sigma2_hat);
        out.nu_blup.push_back(shrink * mean);
        out.group_ids.push_back(g.id);
    }
    return out;
}

double lse_predict(const LseFit& fit, const std::string& group_id, std::span<const double> x_row,
                   bool strict) {
    if (x_row.size() != fit.beta_hat.size())
        throw DimensionMismatch("lse_predict: covariate row has wrong length");
    double nu = 0.0;
    const auto it = std::find(fit.group_ids.begin(), fit.group_ids.end(), group_id);
    if (it != fit.group_ids.end()) {
        nu = fit.nu_blup[static_cast<std::size_t>(it - fit.group_ids.begin())];
    } else if (strict) {
        throw UnknownGroup("lse_predict: group '" + group_id + "' was not in the training data");
    }
    return std::exp(dot(fit.beta_hat, x_row) + nu);
}

DenseMatrix compound_symmetry_inverse(std::size_t n, double sigma2, double phi) {
    const double phi2 = phi * phi;
    const double gamma = sigma2 / (phi2 + static_cast<double>(n) * sigma2);
    DenseMatrix m(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) m(a, b) = ((a == b ? 1.0 : 0.0) - gamma) / phi2;
    return m;
}

}  // namespace hre
