#pragma once

#include <span>
#include <vector>

#include "hre/model.hpp"

namespace hre {

// Per-group Laplace quantities at the mode nu_hat. Values are in the kernel
// convention of group_h_likelihood (no data-only constants).
struct LaplaceReport {
    double h_at_mode = 0.0;
    double curvature = 0.0;   // D_i^* = -h2 at nu_hat
    double tau2 = 0.0;        // 1 / D_i^*
    double h3 = 0.0;
    double h4 = 0.0;
    double first_order_logm = 0.0;
    double correction = 0.0;  // C_{n_i}
    double second_order_logm = 0.0;
};

struct NuProfile {
    double nu_hat = 0.0;
    LaplaceReport report;
};

struct PosteriorApprox {
    double mean = 0.0;
    double variance = 0.0;
};

enum class LaplaceOrder { First, Second };

// Mode of h_i in nu for fixed (beta, sigma2). h1 is strictly decreasing, and
// with a_j = log Y_ij - X_ij beta the root lies in
// [min(0, min_j a_j), max(0, max_j a_j)], which is used as the bracket.
NuProfile profile_nu(const Group& group, std::span<const double> beta, double sigma2);

// Same, from precomputed offsets a_j = log Y_ij - X_ij beta.
double profile_nu_offsets(std::span<const double> offsets, double sigma2);

// p_alpha(l) for a scalar alpha: l - log(curvature / 2 pi) / 2.
double laplace_adjust(double l_value, double curvature);

// Second-order Laplace term C with
//   J1 = -h4 / h2^2,  J2 = -h3^2 / h2^3,  C = J1/8 - 5 J2/24
// on raw derivatives, so that int e^h = e^{h(mode)} sqrt(2 pi / D) (1 - C).
double laplace_correction(double h2, double h3, double h4);

// Absolute marginal log-likelihood approximations (constants restored).
// First: p_nu(H). Second: adds sum_i log(1 - C_i); throws CorrectionTooLarge
// if some C_i >= 1.
double marginal_loglik_laplace(const PanelDataset& data, const ModelParams& params,
                               LaplaceOrder order);

// Absolute log marginal likelihood sum_i log int e^{h_i} d nu_i by adaptive
// quadrature around each mode. Test and diagnostic oracle.
double marginal_loglik_quadrature(const PanelDataset& data, const ModelParams& params,
                                  double rel_tol = 1e-11);

// Kernel-convention log int e^{h_i} d nu for one group.
double group_log_marginal_quadrature(const Group& group, std::span<const double> beta,
                                     double sigma2, double rel_tol = 1e-11);

// E(nu_i | Y_i) and Var(nu_i | Y_i) by ratios of quadratures.
PosteriorApprox posterior_moments_quadrature(const Group& group, std::span<const double> beta,
                                             double sigma2);

// Normal(nu_hat, 1/D) from the profile.
PosteriorApprox posterior_normal_approx(const Group& group, std::span<const double> beta,
                                        double sigma2);

// Total-variation distance between the exact posterior of nu_i and its
// normal approximation.
double posterior_tv_gap(const Group& group, std::span<const double> beta, double sigma2);

// d m / d beta by quadrature. Uses
//   E[sum_j (t_j - 1/t_j) x_j | Y] = (sum_j x_j e^{a_j}) E[e^{-nu}] - (sum_j x_j e^{-a_j}) E[e^{nu}]
// so only positive integrands are integrated.
std::vector<double> marginal_beta_gradient_quadrature(const PanelDataset& data,
                                                      std::span<const double> beta,
                                                      double sigma2);

struct MarginalMaximum {
    std::vector<double> beta;
    double loglik = 0.0;
    int iterations = 0;
};

// Maximiser of the quadrature marginal likelihood over beta at fixed sigma2.
MarginalMaximum maximize_marginal_quadrature(const PanelDataset& data, double sigma2,
                                             std::span<const double> beta_start,
                                             double grad_tol = 1e-9, int max_iter = 200);

}  // namespace hre
