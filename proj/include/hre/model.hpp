#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hre/linalg.hpp"

namespace hre {

// One cluster of repeated measurements: responses Y_i (strictly positive)
// and the n_i x p design X_i whose first column is the intercept.
struct Group {
    std::string id;
    std::vector<double> responses;
    DenseMatrix design;

    std::size_t size() const { return responses.size(); }
};

// Validated panel of K >= 1 groups sharing the covariate dimension p.
class PanelDataset {
public:
    // Throws DomainError on any violated invariant (non-positive response,
    // empty group, ragged design, no groups).
    explicit PanelDataset(std::vector<Group> groups);

    const std::vector<Group>& groups() const { return groups_; }
    const Group& group(std::size_t i) const { return groups_[i]; }
    std::size_t num_groups() const { return groups_.size(); }
    std::size_t num_covariates() const { return p_; }
    std::size_t num_observations() const { return n_; }
    std::size_t min_group_size() const;

private:
    std::vector<Group> groups_;
    std::size_t p_ = 0;
    std::size_t n_ = 0;
};

enum class Sigma2Mode { Known, Estimate };

struct ModelParams {
    std::vector<double> beta;
    double sigma2 = 1.0;
    Sigma2Mode sigma2_mode = Sigma2Mode::Known;
};

struct RandomEffects {
    std::vector<double> nu;
};

// nu-derivatives of h_i at one point. value is the kernel-convention h_i.
struct DerivBundle {
    double value = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
    double h3 = 0.0;
    double h4 = 0.0;
};

// c in f(t) = c exp{-t - 1/t - log t + 2}, computed once by quadrature of
// the log-scale integral of exp(-2 cosh s).
double normalize_constant();

// log f(t) for the efficient multiplicative error law.
double error_log_density(double t);

// -(t + 1/t) with t = y exp(-eta): the conditional log-density of y given
// the linear predictor eta with every (beta, nu)-free constant dropped.
double cond_log_density_kernel(double y, double eta);

// |y - e^eta|/y * |y - e^eta|/e^eta, the product of the two relative errors.
// Equals -kernel - 2.
double relative_error_product(double y, double eta);

// log t = log y - eta, guarded: |log t| > 700 raises OverflowError instead
// of producing inf/0.
double log_ratio(double log_y, double eta);

// X_i beta for every row of the group.
std::vector<double> linear_predictor(const Group& group, std::span<const double> beta);

// Kernel-convention contribution h_i of one group:
//   sum_j kernel(Y_ij, X_ij beta + nu) - log(sigma2)/2 - nu^2/(2 sigma2)
double group_h_likelihood(const Group& group, std::span<const double> beta, double sigma2,
                          double nu);

// H = sum_i h_i in kernel convention.
double h_likelihood(const PanelDataset& data, const ModelParams& params,
                    const RandomEffects& nu);

// Constants dropped by the kernel convention, so that kernel + constant is
// the exact log joint density of (Y, nu):
//   n (log c + 2) - sum log Y_ij - (K/2) log(2 pi)
double h_likelihood_constant(const PanelDataset& data);

// h_i and its nu-derivatives up to `order` (1..4). With t_j = Y_ij e^{-eta_ij}
// and d t_j / d nu = -t_j, each derivative flips the sign of the 1/t part:
//   h1 =  sum (t - 1/t) - nu/sigma2
//   h2 = -sum (t + 1/t) - 1/sigma2
//   h3 =  sum (t - 1/t)
//   h4 = -sum (t + 1/t)
DerivBundle nu_derivatives(const Group& group, std::span<const double> beta, double sigma2,
                           double nu, int order);

// dH/dbeta at fixed nu: sum_ij (t_ij - 1/t_ij) X_ij.
std::vector<double> beta_gradient(const PanelDataset& data, const ModelParams& params,
                                  const RandomEffects& nu);

// Blocks of the joint Hessian of H in (beta, nu).
struct JointHessian {
    DenseMatrix beta_beta;          // -sum_ij w_ij X_ij X_ij^T
    DenseMatrix beta_nu;            // column i: -sum_j w_ij X_ij
    std::vector<double> nu_nu;      // diagonal: h2 of each group
};

JointHessian joint_hessian(const PanelDataset& data, const ModelParams& params,
                           const RandomEffects& nu);

// The negated joint Hessian as an arrowhead SPD matrix.
ArrowheadSpd negated_joint_hessian(const PanelDataset& data, std::span<const double> beta,
                                   double sigma2, std::span<const double> nu);

}  // namespace hre
