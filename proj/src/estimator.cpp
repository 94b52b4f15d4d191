#include "hre/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "hre/errors.hpp"
#include "hre/laplace.hpp"
#include "hre/optimize.hpp"

namespace hre {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2 pi)

std::vector<double> offsets_of(const Group& g, std::span<const double> beta) {
    std::vector<double> a = linear_predictor(g, beta);
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = log_ratio(std::log(g.responses[j]), a[j]);
    return a;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

std::vector<double> log_ols(const PanelDataset& data) {
    const std::size_t p = data.num_covariates();
    DenseMatrix xtx(p, p);
    std::vector<double> xty(p, 0.0);
    for (const Group& g : data.groups())
        for (std::size_t j = 0; j < g.size(); ++j) {
            const auto x = g.design.row(j);
            const double ly = std::log(g.responses[j]);
            for (std::size_t a = 0; a < p; ++a) {
                xty[a] += x[a] * ly;
                for (std::size_t b = 0; b < p; ++b) xtx(a, b) += x[a] * x[b];
            }
        }
    try {
        return solve_spd(xtx, xty);
    } catch (const NotPositiveDefinite&) {
        throw DegenerateDesign("X^T X is singular; covariates are collinear or constant");
    }
}

AdjustedProfile adjusted_profile(const PanelDataset& data, std::span<const double> beta,
                                 double sigma2, bool with_derivatives) {
    const std::size_t p = data.num_covariates();
    const std::size_t k = data.num_groups();
    AdjustedProfile out;
    out.nu_hat.resize(k);
    if (with_derivatives) {
        out.gradient.assign(p, 0.0);
        out.information = DenseMatrix(p, p);
    }
    std::vector<double> g(p), b(p);
    double value = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const Group& grp = data.group(i);
        const std::vector<double> a = offsets_of(grp, beta);
        const double nu = profile_nu_offsets(a, sigma2);
        out.nu_hat[i] = nu;
        std::fill(g.begin(), g.end(), 0.0);
        std::fill(b.begin(), b.end(), 0.0);
        double sum_w = 0.0, h3 = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            const double t = std::exp(log_ratio(a[j], nu));
            const double w = t + 1.0 / t;
            const double r = t - 1.0 / t;
            sum_w += w;
            h3 += r;
            if (with_derivatives) {
                const auto x = grp.design.row(j);
                for (std::size_t c = 0; c < p; ++c) {
                    g[c] += r * x[c];
                    b[c] += w * x[c];
                    for (std::size_t e = 0; e <= c; ++e) out.information(c, e) += w * x[c] * x[e];
                }
            }
        }
        const double d = sum_w + 1.0 / sigma2;
        const double h = -sum_w - 0.5 * std::log(sigma2) - nu * nu / (2.0 * sigma2);
        value += laplace_adjust(h, d);
        if (with_derivatives) {
            for (std::size_t c = 0; c < p; ++c) {
                // dD/dbeta = -g + h3 b / D
                const double dd = -g[c] + h3 * b[c] / d;
                out.gradient[c] += g[c] - 0.5 * dd / d;
                for (std::size_t e = 0; e <= c; ++e) out.information(c, e) -= b[c] * b[e] / d;
            }
        }
    }
    if (with_derivatives)
        for (std::size_t c = 0; c < p; ++c)
            for (std::size_t e = 0; e < c; ++e) out.information(e, c) = out.information(c, e);
    out.value = value + h_likelihood_constant(data);
    return out;
}

BetaStep beta_step(const PanelDataset& data, std::span<const double> beta, double sigma2,
                   const FitConfig& config) {
    const AdjustedProfile at = adjusted_profile(data, beta, sigma2, true);
    BetaStep out;
    out.beta.assign(beta.begin(), beta.end());
    out.objective_before = at.value;
    out.objective_after = at.value;
    out.gradient_max_abs = max_abs(at.gradient);
    if (out.gradient_max_abs == 0.0) return out;

    std::vector<double> direction;
    try {
        direction = solve_spd(at.information, at.gradient);
    } catch (const NotPositiveDefinite&) {
        throw DegenerateDesign("profiled information for beta is singular");
    }
    const double slope = dot(at.gradient, direction);
    // Near the maximiser the predicted increase drops below the round-off of
    // p_nu(H) and Armijo can no longer tell steps apart. The Newton step is
    // then tiny, so take it as is.
    if (slope <= 1e-11 * (1.0 + std::abs(at.value))) {
        std::vector<double> trial(beta.begin(), beta.end());
        for (std::size_t c = 0; c < trial.size(); ++c) trial[c] += direction[c];
        out.step_max_abs = max_abs_diff(trial, beta);
        out.beta = std::move(trial);
        return out;
    }
    double alpha = 1.0;
    for (int halving = 0; halving <= config.max_halvings; ++halving, alpha *= config.backtrack) {
        std::vector<double> trial(beta.begin(), beta.end());
        for (std::size_t c = 0; c < trial.size(); ++c) trial[c] += alpha * direction[c];
        double value;
        try {
            value = adjusted_profile(data, trial, sigma2, false).value;
        } catch (const OverflowError&) {
            continue;
        }
        if (value >= at.value + config.armijo_c * alpha * slope) {
            out.step_max_abs = max_abs_diff(trial, beta);
            out.beta = std::move(trial);
            out.objective_after = value;
            out.halvings = halving;
            return out;
        }
    }
    throw LineSearchFailed("beta_step: no sufficient increase after " +
                           std::to_string(config.max_halvings) + " halvings (slope " +
                           std::to_string(slope) + ")");
}

DispersionObjective dispersion_objective(const PanelDataset& data, std::span<const double> beta,
                                         double log_sigma2, bool with_derivative) {
    const double sigma2 = std::exp(log_sigma2);
    const std::size_t p = data.num_covariates();
    const std::size_t k = data.num_groups();
    ArrowheadSpd neg{DenseMatrix(p, p), DenseMatrix(p, k), std::vector<double>(k)};

    // Per-group pieces needed for the derivative.
    std::vector<double> q(k), h3(k), dd(k);
    std::vector<std::vector<double>> g(k, std::vector<double>(p, 0.0));
    std::vector<DenseMatrix> r_outer;
    if (with_derivative) r_outer.assign(k, DenseMatrix(p, p));

    double h_total = 0.0;
    double dh = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const Group& grp = data.group(i);
        const std::vector<double> a = offsets_of(grp, beta);
        const double nu = profile_nu_offsets(a, sigma2);
        double sum_w = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            const double t = std::exp(log_ratio(a[j], nu));
            const double w = t + 1.0 / t;
            const double r = t - 1.0 / t;
            sum_w += w;
            h3[i] += r;
            const auto x = grp.design.row(j);
            for (std::size_t c = 0; c < p; ++c) {
                neg.cross(c, i) += w * x[c];
                g[i][c] += r * x[c];
                for (std::size_t e = 0; e <= c; ++e) {
                    neg.corner(c, e) += w * x[c] * x[e];
                    if (with_derivative) r_outer[i](c, e) += r * x[c] * x[e];
                }
            }
        }
        neg.diag[i] = sum_w + 1.0 / sigma2;
        h_total += -sum_w - 0.5 * log_sigma2 - nu * nu / (2.0 * sigma2);
        dh += -0.5 + nu * nu / (2.0 * sigma2);
        // d nu_hat / d log sigma2 and the induced change of D_i
        q[i] = (nu / sigma2) / neg.diag[i];
        dd[i] = -h3[i] * q[i] - 1.0 / sigma2;
    }
    for (std::size_t c = 0; c < p; ++c)
        for (std::size_t e = 0; e < c; ++e) neg.corner(e, c) = neg.corner(c, e);

    const DenseMatrix schur = neg.schur_complement();
    double logdet = logdet_spd(schur);
    for (double d : neg.diag) logdet += std::log(d);

    DispersionObjective out;
    const double dim = static_cast<double>(p + k);
    out.value = h_total - 0.5 * (logdet - dim * kLogTwoPi) + h_likelihood_constant(data);
    if (!with_derivative) return out;

    // d S / d s with S = A - sum_i b_i b_i^T / D_i, A = sum w x x^T, b_i = sum w x:
    //   dA = -sum_i q_i R_i,  db_i = -q_i g_i
    DenseMatrix ds(p, p);
    double dlogdet = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double d = neg.diag[i];
        dlogdet += dd[i] / d;
        for (std::size_t c = 0; c < p; ++c)
            for (std::size_t e = 0; e <= c; ++e) {
                const double bc = neg.cross(c, i), be = neg.cross(e, i);
                double v = -q[i] * r_outer[i](c, e);
                v += q[i] * (g[i][c] * be + bc * g[i][e]) / d;
                v += bc * be * dd[i] / (d * d);
                ds(c, e) += v;
            }
    }
    for (std::size_t c = 0; c < p; ++c)
        for (std::size_t e = 0; e < c; ++e) ds(e, c) = ds(c, e);
    const DenseMatrix schur_inv = inverse_spd(schur);
    for (std::size_t c = 0; c < p; ++c)
        for (std::size_t e = 0; e < p; ++e) dlogdet += schur_inv(c, e) * ds(e, c);

    out.derivative = dh - 0.5 * dlogdet;
    return out;
}

Sigma2Step sigma2_step(const PanelDataset& data, std::span<const double> beta,
                       const FitConfig& config) {
    constexpr double kGoldenTol = 1e-4;
    int evals = 0;
    auto value_at = [&](double s) {
        ++evals;
        return dispersion_objective(data, beta, s, false).value;
    };
    const Maximum1d coarse =
        maximize_golden(value_at, {config.log_sigma2_lo, config.log_sigma2_hi}, kGoldenTol);

    Sigma2Step out;
    out.sigma2 = std::exp(coarse.x);
    out.objective = coarse.value;
    out.bound_hit = coarse.at_lower_bound || coarse.at_upper_bound;
    if (out.bound_hit) {
        out.evaluations = evals;
        return out;
    }

    // Polish: root of the analytic derivative inside the golden bracket.
    const double scale = static_cast<double>(data.num_groups());
    auto slope_at = [&](double s) {
        ++evals;
        return dispersion_objective(data, beta, s, true).derivative / scale;
    };
    const double lo = std::max(config.log_sigma2_lo, coarse.x - 3.0 * kGoldenTol);
    const double hi = std::min(config.log_sigma2_hi, coarse.x + 3.0 * kGoldenTol);
    try {
        const double s = find_root_1d(slope_at, {lo, hi}, 1e-13);
        const double v = value_at(s);
        if (v >= coarse.value - 1e-9 * (1.0 + std::abs(coarse.value))) {
            out.sigma2 = std::exp(s);
            out.objective = v;
        }
    } catch (const NoSignChange&) {
        // golden estimate stands
    } catch (const MaxIterations&) {
    }
    out.evaluations = evals;
    return out;
}

StandardErrors standard_errors(const PanelDataset& data, std::span<const double> beta,
                               double sigma2, std::span<const double> nu) {
    const ArrowheadSpd neg = negated_joint_hessian(data, beta, sigma2, nu);
    StandardErrors out;
    try {
        out.vcov = neg.inverse();
    } catch (const NotPositiveDefinite& e) {
        throw SingularM(std::string("joint information matrix is singular: ") + e.what());
    }
    const std::size_t p = data.num_covariates();
    out.se_beta.resize(p);
    for (std::size_t c = 0; c < p; ++c) out.se_beta[c] = std::sqrt(out.vcov(c, c));
    return out;
}

FitResult fit(const PanelDataset& data, const FitConfig& config,
              const std::optional<ModelParams>& init) {
    if (config.sigma2_mode == Sigma2Mode::Known && !(config.sigma2_known > 0.0))
        throw DomainError("fit: known sigma2 must be positive");

    std::vector<double> beta;
    double sigma2;
    if (init) {
        if (init->beta.size() != data.num_covariates())
            throw DimensionMismatch("fit: initial beta has wrong length");
        beta = init->beta;
        sigma2 = init->sigma2;
    } else {
        // Start: log-scale least squares, nu from group-mean residuals.
        beta = log_ols(data);
        double sum_sq = 0.0;
        for (const Group& g : data.groups()) {
            const std::vector<double> eta = linear_predictor(g, beta);
            double mean = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j) mean += std::log(g.responses[j]) - eta[j];
            mean /= static_cast<double>(g.size());
            sum_sq += mean * mean;
        }
        sigma2 = std::max(1e-4, sum_sq / static_cast<double>(data.num_groups()));
    }
    if (config.sigma2_mode == Sigma2Mode::Known) sigma2 = config.sigma2_known;

    FitResult res;
    bool bound_hit = false;
    double previous_change = std::numeric_limits<double>::infinity();
    try {
        for (int it = 1; it <= config.max_outer_iters + 1; ++it) {
            const BetaStep bs = beta_step(data, beta, sigma2, config);
            res.gradient_max_abs = bs.gradient_max_abs;
            if (previous_change <= config.tol_param && bs.gradient_max_abs <= config.tol_grad) {
                res.converged = true;
                break;
            }
            if (it > config.max_outer_iters) break;

            double new_sigma2 = sigma2;
            IterationTrace tr;
            tr.p_beta_nu_H = NAN;
            if (config.sigma2_mode == Sigma2Mode::Estimate) {
                const Sigma2Step ss = sigma2_step(data, bs.beta, config);
                new_sigma2 = ss.sigma2;
                bound_hit = ss.bound_hit;
                tr.p_beta_nu_H = ss.objective;
            }
            previous_change = std::max(max_abs_diff(bs.beta, beta), std::abs(new_sigma2 - sigma2));
            beta = bs.beta;
            sigma2 = new_sigma2;

            tr.iteration = it;
            tr.beta = beta;
            tr.sigma2 = sigma2;
            tr.p_nu_H = bs.objective_after;
            tr.gradient_max_abs = bs.gradient_max_abs;
            tr.param_change = previous_change;
            res.trace.push_back(std::move(tr));
            res.iterations = it;
        }
    } catch (const LineSearchFailed& e) {
        res.warnings.push_back(e.what());
    }

    if (!res.converged)
        res.warnings.push_back("not converged after " + std::to_string(res.iterations) +
                               " outer iterations");
    if (bound_hit)
        res.warnings.push_back("sigma2 estimate at the edge of the log-sigma2 search interval");
    if (data.min_group_size() == 1 && data.num_observations() == data.num_groups())
        res.warnings.push_back("every group has a single observation; sigma2 is weakly identified");

    const AdjustedProfile final_profile = adjusted_profile(data, beta, sigma2, false);
    res.beta_hat = beta;
    res.sigma2_hat = sigma2;
    res.nu_hat = final_profile.nu_hat;
    ModelParams params{beta, sigma2, config.sigma2_mode};
    res.logliks.h_lik =
        h_likelihood(data, params, RandomEffects{res.nu_hat}) + h_likelihood_constant(data);
    res.logliks.p_nu_H = final_profile.value;
    res.logliks.p_beta_nu_H = dispersion_objective(data, beta, std::log(sigma2), false).value;

    StandardErrors se = standard_errors(data, beta, sigma2, res.nu_hat);
    res.se_beta = std::move(se.se_beta);
    res.vcov = std::move(se.vcov);
    return res;
}

}  // namespace hre
