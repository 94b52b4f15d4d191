#pragma once

#include <functional>

namespace hre {

struct Interval {
    double lo;
    double hi;
};

using ScalarFn = std::function<double(double)>;

// Safeguarded root finder on a sign-changing bracket. With a derivative the
// trial step is Newton; without one it is a secant through the bracket ends.
// A trial step that leaves the bracket or fails to halve it falls back to
// bisection, so convergence is guaranteed.
//
// Stops when |f(x)| <= tol or the bracket is narrower than tol.
// Throws NoSignChange and MaxIterations (after max_iter evaluations).
double find_root_1d(const ScalarFn& f, Interval bracket, double tol,
                    const ScalarFn& derivative = {}, int max_iter = 200);

struct Maximum1d {
    double x;
    double value;
    int evaluations;
    bool at_lower_bound;
    bool at_upper_bound;
};

// Golden-section search for the maximiser of a unimodal f on [lo, hi].
// A maximiser closer than xtol to an end of the interval is reported with
// the corresponding bound flag set.
Maximum1d maximize_golden(const ScalarFn& f, Interval range, double xtol);

}  // namespace hre
