#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hre/errors.hpp"
#include "hre/estimator.hpp"
#include "hre/laplace.hpp"
#include "hre/rng.hpp"
#include "hre/simulation.hpp"

using namespace hre;

namespace {

const std::vector<double> kBeta{2.0, 2.0, 1.0, 1.0};

PanelDataset panel(ErrorLaw law, int k, int n, int rep, std::uint64_t seed = 5, double sigma2 = 1.0) {
    SimSpec spec;
    spec.error_law = law;
    spec.K = k;
    spec.n_i = n;
    spec.sigma2_true = sigma2;
    spec.base_seed = seed;
    return generate(spec, rep);
}

// log|A| by partial-pivot elimination on a copy.
double logdet_dense(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        s += std::log(std::abs(a[c][c]));
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
        }
    }
    return s;
}

std::vector<double> profiled_nu(const PanelDataset& d, std::span<const double> beta, double sigma2) {
    std::vector<double> nu;
    for (const Group& g : d.groups()) nu.push_back(profile_nu(g, beta, sigma2).nu_hat);
    return nu;
}

// Dense (p + K) negated joint Hessian from the model blocks.
std::vector<std::vector<double>> dense_negated_hessian(const PanelDataset& d, std::span<const double> beta,
                                                       double sigma2, const std::vector<double>& nu) {
    const JointHessian jh = joint_hessian(d, ModelParams{std::vector<double>(beta.begin(), beta.end()), sigma2},
                                          RandomEffects{nu});
    const std::size_t p = beta.size(), k = nu.size();
    std::vector<std::vector<double>> m(p + k, std::vector<double>(p + k, 0.0));
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b) m[a][b] = -jh.beta_beta(a, b);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t i = 0; i < k; ++i) m[a][p + i] = m[p + i][a] = -jh.beta_nu(a, i);
    for (std::size_t i = 0; i < k; ++i) m[p + i][p + i] = -jh.nu_nu[i];
    return m;
}

PanelDataset rescaled(const PanelDataset& d, double s) {
    std::vector<Group> gs = d.groups();
    for (Group& g : gs)
        for (double& y : g.responses) y *= s;
    return PanelDataset(gs);
}

PanelDataset noise_free(int k, int n) {
    // Y = exp(X beta) exactly, nu = 0.
    const PanelDataset base = panel(ErrorLaw::E1, k, n, 0);
    std::vector<Group> gs = base.groups();
    for (Group& g : gs) {
        const std::vector<double> eta = linear_predictor(g, kBeta);
        for (std::size_t j = 0; j < g.size(); ++j) g.responses[j] = std::exp(eta[j]);
    }
    return PanelDataset(gs);
}

}  // namespace

TEST_CASE("adjusted profile value against a direct computation") {
    const PanelDataset d = panel(ErrorLaw::E1, 4, 5, 0);
    const std::vector<double> beta{1.8, 2.2, 0.9, 1.1};
    const double s2 = 0.6;
    const AdjustedProfile ap = adjusted_profile(d, beta, s2);
    const std::vector<double> nu = profiled_nu(d, beta, s2);
    double expected = h_likelihood(d, ModelParams{beta, s2}, RandomEffects{nu}) + h_likelihood_constant(d);
    for (std::size_t i = 0; i < nu.size(); ++i) {
        const double curv = -nu_derivatives(d.group(i), beta, s2, nu[i], 2).h2;
        expected -= 0.5 * std::log(curv / (2 * std::numbers::pi));
        CHECK(ap.nu_hat[i] == doctest::Approx(nu[i]).epsilon(1e-12));
    }
    CHECK(ap.value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("adjusted profile gradient matches finite differences") {
    RngStream rng(17, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const PanelDataset d = panel(ErrorLaw::E1, 3, 4, trial, 9);
        std::vector<double> beta = kBeta;
        for (double& b : beta) b += 0.4 * (rng_uniform(rng) - 0.5);
        const double s2 = 0.2 + 2 * rng_uniform(rng);
        const AdjustedProfile ap = adjusted_profile(d, beta, s2);
        for (std::size_t c = 0; c < beta.size(); ++c) {
            const double e = 1e-5;
            std::vector<double> bp = beta, bm = beta;
            bp[c] += e;
            bm[c] -= e;
            const double fd =
                (adjusted_profile(d, bp, s2, false).value - adjusted_profile(d, bm, s2, false).value) / (2 * e);
            CHECK(std::abs(ap.gradient[c] - fd) < 1e-6 * (1 + std::abs(fd)));
        }
        for (std::size_t a = 0; a < beta.size(); ++a)
            for (std::size_t b = 0; b < beta.size(); ++b)
                CHECK(ap.information(a, b) == doctest::Approx(ap.information(b, a)).epsilon(1e-13));
    }
}

TEST_CASE("dispersion objective against a dense log determinant") {
    for (int k : {1, 3}) {
        const PanelDataset d = panel(ErrorLaw::E1, k, 6, 1);
        const double s2 = 0.7;
        const std::vector<double> nu = profiled_nu(d, kBeta, s2);
        const auto m = dense_negated_hessian(d, kBeta, s2, nu);
        const double dim = static_cast<double>(m.size());
        const double expected = h_likelihood(d, ModelParams{kBeta, s2}, RandomEffects{nu}) +
                                h_likelihood_constant(d) -
                                0.5 * (logdet_dense(m) - dim * std::log(2 * std::numbers::pi));
        CHECK(dispersion_objective(d, kBeta, std::log(s2)).value == doctest::Approx(expected).epsilon(1e-11));
    }
}

TEST_CASE("dispersion objective derivative matches finite differences") {
    for (int rep = 0; rep < 10; ++rep) {
        const PanelDataset d = panel(ErrorLaw::E2, 5, 4, rep);
        for (double s : {-2.0, 0.0, 1.5}) {
            const double e = 1e-5;
            const double fd = (dispersion_objective(d, kBeta, s + e, false).value -
                               dispersion_objective(d, kBeta, s - e, false).value) /
                              (2 * e);
            CHECK(std::abs(dispersion_objective(d, kBeta, s).derivative - fd) < 1e-6 * (1 + std::abs(fd)));
        }
    }
}

TEST_CASE("sigma2 step finds the grid maximum") {
    const PanelDataset d = panel(ErrorLaw::E1, 10, 10, 2);
    const Sigma2Step st = sigma2_step(d, kBeta);
    CHECK_FALSE(st.bound_hit);
    double best = -1e300, best_s = 0.0;
    for (double s = -6.0; s <= 4.0; s += 1e-3) {
        const double v = dispersion_objective(d, kBeta, s, false).value;
        if (v > best) {
            best = v;
            best_s = s;
        }
    }
    CHECK(std::abs(std::log(st.sigma2) - best_s) < 2e-3);
    CHECK(st.objective >= best - 1e-9);
    CHECK(std::abs(dispersion_objective(d, kBeta, std::log(st.sigma2)).derivative) < 1e-6);
}

TEST_CASE("noise-free data are recovered exactly") {
    const PanelDataset d = noise_free(5, 8);
    FitConfig cfg;
    cfg.sigma2_mode = Sigma2Mode::Known;
    cfg.sigma2_known = 0.5;
    const FitResult r = fit(d, cfg);
    REQUIRE(r.converged);
    for (std::size_t c = 0; c < kBeta.size(); ++c) CHECK(std::abs(r.beta_hat[c] - kBeta[c]) < 1e-7);
    for (double v : r.nu_hat) CHECK(std::abs(v) < 1e-7);
}

TEST_CASE("no between-group variation pushes sigma2 to the bound") {
    const PanelDataset d = noise_free(5, 8);
    const FitResult r = fit(d);
    CHECK(r.sigma2_hat < std::exp(-11.0));
    const bool flagged = std::any_of(r.warnings.begin(), r.warnings.end(),
                                     [](const std::string& w) { return w.find("edge") != std::string::npos; });
    CHECK(flagged);
}

TEST_CASE("p_nu(H) never decreases along the known-sigma2 trace") {
    for (int rep = 0; rep < 10; ++rep) {
        const PanelDataset d = panel(ErrorLaw::E3, 10, 10, rep);
        FitConfig cfg;
        cfg.sigma2_mode = Sigma2Mode::Known;
        const FitResult r = fit(d, cfg);
        CHECK(r.converged);
        for (std::size_t k = 1; k < r.trace.size(); ++k)
            CHECK(r.trace[k].p_nu_H >= r.trace[k - 1].p_nu_H - 1e-9 * std::abs(r.trace[k - 1].p_nu_H));
    }
}

TEST_CASE("rescaling Y shifts only the intercept") {
    const PanelDataset d = panel(ErrorLaw::E1, 10, 10, 3);
    const FitResult base = fit(d);
    for (double s : {0.01, 100.0}) {
        const FitResult r = fit(rescaled(d, s));
        CHECK(r.beta_hat[0] == doctest::Approx(base.beta_hat[0] + std::log(s)).epsilon(1e-6));
        for (std::size_t c = 1; c < kBeta.size(); ++c)
            CHECK(std::abs(r.beta_hat[c] - base.beta_hat[c]) < 1e-6);
        CHECK(r.sigma2_hat == doctest::Approx(base.sigma2_hat).epsilon(1e-6));
    }
}

TEST_CASE("fit is deterministic") {
    const PanelDataset d = panel(ErrorLaw::E2, 10, 10, 4);
    const FitResult a = fit(d), b = fit(d);
    CHECK(a.beta_hat == b.beta_hat);
    CHECK(a.sigma2_hat == b.sigma2_hat);
    CHECK(a.se_beta == b.se_beta);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("standard errors shrink like one over root K") {
    double ratio = 0.0;
    const int reps = 10;
    for (int rep = 0; rep < reps; ++rep) {
        const FitResult small = fit(panel(ErrorLaw::E1, 20, 10, rep, 31));
        const FitResult large = fit(panel(ErrorLaw::E1, 40, 10, rep, 32));
        ratio += large.se_beta[1] / small.se_beta[1] / reps;
    }
    CHECK(ratio == doctest::Approx(1 / std::sqrt(2.0)).epsilon(0.1));
}

TEST_CASE("median iteration count is small") {
    std::vector<int> known, estimated;
    for (int rep = 0; rep < 40; ++rep) {
        const PanelDataset d = panel(ErrorLaw::E1, 10, 10, rep, 77);
        FitConfig cfg;
        cfg.sigma2_mode = Sigma2Mode::Known;
        known.push_back(fit(d, cfg).iterations);
        estimated.push_back(fit(d).iterations);
    }
    std::sort(known.begin(), known.end());
    std::sort(estimated.begin(), estimated.end());
    CHECK(known[known.size() / 2] <= 10);
    CHECK(estimated[estimated.size() / 2] <= 10);
}

TEST_CASE("covariance matrix is symmetric and matches the dense inverse") {
    const PanelDataset d = panel(ErrorLaw::E1, 3, 5, 0);
    const FitResult r = fit(d);
    const std::size_t dim = r.vcov.rows();
    for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b) CHECK(r.vcov(a, b) == doctest::Approx(r.vcov(b, a)).epsilon(1e-12));

    // vcov times the negated joint Hessian is the identity.
    const auto m = dense_negated_hessian(d, r.beta_hat, r.sigma2_hat, r.nu_hat);
    for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b) {
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) s += r.vcov(a, k) * m[k][b];
            CHECK(std::abs(s - (a == b ? 1.0 : 0.0)) < 1e-9);
        }
    for (std::size_t c = 0; c < r.se_beta.size(); ++c)
        CHECK(r.se_beta[c] == doctest::Approx(std::sqrt(r.vcov(c, c))).epsilon(1e-14));
}

TEST_CASE("collinear design is rejected") {
    const PanelDataset base = panel(ErrorLaw::E1, 3, 4, 0);
    std::vector<Group> gs = base.groups();
    for (Group& g : gs)
        for (std::size_t j = 0; j < g.size(); ++j) g.design(j, 2) = g.design(j, 1);
    CHECK_THROWS_AS(fit(PanelDataset(gs)), DegenerateDesign);
}
