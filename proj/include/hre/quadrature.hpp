#pragma once

#include <cstddef>

#include "hre/optimize.hpp"

namespace hre {

struct QuadratureResult {
    double value = 0.0;
    double abs_error_estimate = 0.0;
    std::size_t evaluations = 0;
};

// Adaptive 7/15-point Gauss-Kronrod on [lo, hi]. Panels with the largest
// |K15 - G7| are bisected until the summed estimate is <= rel_tol * |value|.
// Throws ToleranceNotMet once max_panels is exceeded.
QuadratureResult integrate_gk(const ScalarFn& f, Interval range, double rel_tol,
                              std::size_t max_panels = 4000);

// Integral of a non-negative, unimodal-dominated f over the real line,
// truncated to center +/- 12 * scale. For the h-likelihood integrands the
// center is the mode and the scale the Laplace posterior SD, so the
// truncated tails are far below double precision.
QuadratureResult integrate_1d(const ScalarFn& f, double center, double scale, double tol);

}  // namespace hre
