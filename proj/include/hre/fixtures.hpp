#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hre/model.hpp"
#include "hre/simulation.hpp"

namespace hre {

// Synthetic panel with one covariate taking the same fixed values in every
// group: Y_ij = exp(beta0 + beta1 x_j + nu_i) eps_ij, nu_i ~ N(0, sigma2).
struct ShapedFixture {
    std::string name;
    std::string covariate_name;
    int K = 0;
    std::vector<double> x_values;  // one per observation within a group
    std::vector<double> beta;      // intercept, slope
    double sigma2 = 0.0;
    ErrorLaw error_law = ErrorLaw::E1;
    std::uint64_t seed = 0;
};

// 15 replicates x 6 temperatures 175..225.
ShapedFixture cakes_shape();
// 18 subjects x 10 days 0..9.
ShapedFixture sleepstudy_shape();
// "cakes" or "sleepstudy"; throws DomainError otherwise.
ShapedFixture shape_by_name(const std::string& name);

// Group i uses RngStream(seed, i): nu_i first, then the errors in order.
PanelDataset generate_shaped(const ShapedFixture& fixture);

}  // namespace hre
