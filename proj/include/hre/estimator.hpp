#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hre/linalg.hpp"
#include "hre/model.hpp"

namespace hre {

struct FitConfig {
    int max_outer_iters = 100;
    double tol_param = 1e-8;  // max-norm of the (beta, sigma2) change
    double tol_grad = 1e-8;   // max-norm of d p_nu(H) / d beta
    Sigma2Mode sigma2_mode = Sigma2Mode::Estimate;
    double sigma2_known = 1.0;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    int max_halvings = 30;
    // log sigma2 search interval for the dispersion step
    double log_sigma2_lo = -12.0;
    double log_sigma2_hi = 12.0;
};

// p_nu(H) at (beta, sigma2) with nu profiled out, plus what a Newton step
// on beta needs.
struct AdjustedProfile {
    double value = 0.0;                // absolute (constants restored)
    std::vector<double> gradient;      // total derivative in beta
    DenseMatrix information;           // -d^2 H(beta, nu_hat(beta)) / d beta^2
    std::vector<double> nu_hat;
};

// Evaluates p_nu(H). The gradient differentiates the adjustment
// -1/2 sum log(D_i / 2 pi) through nu_hat(beta) using
// d nu_hat_i / d beta = -b_i / D_i,  b_i = sum_j (t_ij + 1/t_ij) X_ij.
AdjustedProfile adjusted_profile(const PanelDataset& data, std::span<const double> beta,
                                 double sigma2, bool with_derivatives = true);

struct BetaStep {
    std::vector<double> beta;
    double objective_before = 0.0;
    double objective_after = 0.0;
    double gradient_max_abs = 0.0;
    double step_max_abs = 0.0;
    int halvings = 0;
};

// One safeguarded Newton ascent step on p_nu(H) over beta. The metric is the
// information of the nu-profiled H; acceptance is by Armijo on p_nu(H).
// Throws LineSearchFailed when no halving gives sufficient increase.
BetaStep beta_step(const PanelDataset& data, std::span<const double> beta, double sigma2,
                   const FitConfig& config = {});

// p_{beta,nu}(H) as a function of s = log sigma2 at fixed beta, with nu
// re-profiled at every s:
//   H(beta, nu_hat(s)) - 1/2 log det(-Hess_{(beta, nu)} H / 2 pi)
struct DispersionObjective {
    double value = 0.0;        // absolute
    double derivative = 0.0;   // d value / d log sigma2
};

DispersionObjective dispersion_objective(const PanelDataset& data, std::span<const double> beta,
                                         double log_sigma2, bool with_derivative = true);

struct Sigma2Step {
    double sigma2 = 0.0;
    double objective = 0.0;
    bool bound_hit = false;  // maximiser at an end of the log sigma2 interval
    int evaluations = 0;
};

// argmax over sigma2 of p_{beta,nu}(H): golden section on log sigma2 then a
// root polish of the analytic derivative.
Sigma2Step sigma2_step(const PanelDataset& data, std::span<const double> beta,
                       const FitConfig& config = {});

struct LogLiks {
    double h_lik = 0.0;        // H(beta_hat, nu_hat), absolute
    double p_nu_H = 0.0;       // adjusted profile over nu
    double p_beta_nu_H = 0.0;  // adjusted profile over (beta, nu)
};

struct IterationTrace {
    int iteration = 0;
    std::vector<double> beta;
    double sigma2 = 0.0;
    double p_nu_H = 0.0;
    double p_beta_nu_H = 0.0;
    double gradient_max_abs = 0.0;
    double param_change = 0.0;
};

struct FitResult {
    std::vector<double> beta_hat;
    double sigma2_hat = 0.0;
    std::vector<double> nu_hat;
    std::vector<double> se_beta;
    DenseMatrix vcov;  // (p + K) square, (-joint Hessian)^{-1}
    LogLiks logliks;
    int iterations = 0;
    bool converged = false;
    double gradient_max_abs = 0.0;
    std::vector<IterationTrace> trace;
    std::vector<std::string> warnings;
};

// Block ascent on the estimating equations: nu profiled per group, a Newton
// step on p_nu(H) for beta, and (Estimate mode) the dispersion step. Does not
// throw on non-convergence: FitResult::converged is false and the trace is
// kept. Throws DegenerateDesign if log-scale least squares is singular.
FitResult fit(const PanelDataset& data, const FitConfig& config = {},
              const std::optional<ModelParams>& init = std::nullopt);

struct StandardErrors {
    std::vector<double> se_beta;
    DenseMatrix vcov;
};

// M = -(1/n) joint Hessian of H at (beta_hat, nu_hat); vcov = M^{-1} / n.
// Throws SingularM when M is not positive definite.
StandardErrors standard_errors(const PanelDataset& data, std::span<const double> beta,
                               double sigma2, std::span<const double> nu);

// Least squares of log Y on X (start values and the LSE sigma2 = 0 limit).
std::vector<double> log_ols(const PanelDataset& data);

}  // namespace hre
