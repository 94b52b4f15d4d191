#include "hre/optimize.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "hre/errors.hpp"

namespace hre {

double find_root_1d(const ScalarFn& f, Interval bracket, double tol, const ScalarFn& derivative,
                    int max_iter) {
    double a = bracket.lo;
    double b = bracket.hi;
    if (a > b) std::swap(a, b);
    double fa = f(a);
    double fb = f(b);
    if (std::abs(fa) <= tol) return a;
    if (std::abs(fb) <= tol) return b;
    if ((fa > 0.0) == (fb > 0.0)) {
        throw NoSignChange("find_root_1d: f(" + std::to_string(a) + ")=" + std::to_string(fa) +
                           " and f(" + std::to_string(b) + ")=" + std::to_string(fb) +
                           " share a sign");
    }

    // Start from the end with the smaller residual.
    double x = std::abs(fa) < std::abs(fb) ? a : b;
    double fx = std::abs(fa) < std::abs(fb) ? fa : fb;
    double step = b - a;
    double step_before = step;

    for (int it = 0; it < max_iter; ++it) {
        double trial;
        if (derivative) {
            const double d = derivative(x);
            trial = (d != 0.0 && std::isfinite(d)) ? x - fx / d : NAN;
        } else {
            trial = (fb != fa) ? b - fb * (b - a) / (fb - fa) : NAN;
        }
        const bool inside = std::isfinite(trial) && trial > a && trial < b;
        step_before = step;
        if (inside && std::abs(trial - x) <= 0.5 * std::abs(step_before)) {
            step = trial - x;
            x = trial;
        } else {
            step = 0.5 * (b - a);
            x = a + step;
        }

        fx = f(x);
        if (std::abs(fx) <= tol) return x;
        if ((fx > 0.0) == (fa > 0.0)) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if (b - a <= tol) return x;
    }
    throw MaxIterations("find_root_1d: no convergence after " + std::to_string(max_iter) +
                        " iterations");
}

Maximum1d maximize_golden(const ScalarFn& f, Interval range, double xtol) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = range.lo;
    double b = range.hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c);
    double fd = f(d);
    int evals = 2;
    while (b - a > xtol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
        ++evals;
    }
    Maximum1d out{};
    if (fc >= fd) {
        out.x = c;
        out.value = fc;
    } else {
        out.x = d;
        out.value = fd;
    }
    // Compare with the interval ends so monotone objectives report the edge.
    const double f_lo = f(range.lo);
    const double f_hi = f(range.hi);
    evals += 2;
    if (f_lo >= out.value) out = {range.lo, f_lo, 0, false, false};
    if (f_hi > out.value) out = {range.hi, f_hi, 0, false, false};
    out.evaluations = evals;
    out.at_lower_bound = out.x - range.lo <= xtol;
    out.at_upper_bound = range.hi - out.x <= xtol;
    return out;
}

}  // namespace hre
