#pragma once

#include <span>
#include <string>
#include <vector>

#include "hre/linalg.hpp"
#include "hre/model.hpp"

namespace hre {

// Residual SD of the normal approximation to the log of the efficient error.
inline constexpr double kLseDefaultPhi = 0.6434;

struct LseConfig {
    Sigma2Mode sigma2_mode = Sigma2Mode::Estimate;
    double sigma2_known = 1.0;  // >= 0; 0 reduces GLS to ordinary least squares
    double phi = kLseDefaultPhi;
    double log_sigma2_lo = -12.0;
    double log_sigma2_hi = 12.0;
};

struct LseFit {
    std::vector<double> beta_hat;
    double sigma2_hat = 0.0;
    std::vector<double> nu_blup;
    std::vector<std::string> group_ids;
    std::vector<double> se_beta;
    double phi = kLseDefaultPhi;
    double loglik = 0.0;  // Gaussian log-likelihood of log Y
    bool sigma2_bound_hit = false;
};

// GLS of log Y on X under the compound-symmetry covariance
// sigma2 * J + phi^2 * I within each group. Each block inverse uses the
// closed form phi^{-2} (I - gamma_i J), gamma_i = sigma2 / (phi^2 + n_i sigma2).
LseFit lse_fit(const PanelDataset& data, const LseConfig& config = {});

// Gaussian log-likelihood of log Y at sigma2, with beta at its GLS value.
double lse_profile_loglik(const PanelDataset& data, double sigma2, double phi);

// GLS beta for a given sigma2.
std::vector<double> lse_gls_beta(const PanelDataset& data, double sigma2, double phi);

// exp(x^T beta_hat + BLUP of the group); an unseen group gets BLUP 0 unless
// strict, in which case UnknownGroup is thrown.
double lse_predict(const LseFit& fit, const std::string& group_id, std::span<const double> x_row,
                   bool strict = false);

// Dense Sigma_i^{-1} for one group (test support).
DenseMatrix compound_symmetry_inverse(std::size_t n, double sigma2, double phi);

}  // namespace hre
