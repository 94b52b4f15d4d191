#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hre/errors.hpp"
#include "hre/estimator.hpp"
#include "hre/lse.hpp"
#include "hre/simulation.hpp"

using namespace hre;

namespace {

using Mat = std::vector<std::vector<double>>;

PanelDataset panel(int k, int n, int rep, std::uint64_t seed = 3) {
    SimSpec spec;
    spec.error_law = ErrorLaw::E2;
    spec.K = k;
    spec.n_i = n;
    spec.base_seed = seed;
    return generate(spec, rep);
}

// Gauss-Jordan inverse with partial pivoting.
Mat invert(Mat a) {
    const std::size_t n = a.size();
    Mat inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(inv[c], inv[piv]);
        const double d = a[c][c];
        for (std::size_t k = 0; k < n; ++k) {
            a[c][k] /= d;
            inv[c][k] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = a[r][c];
            for (std::size_t k = 0; k < n; ++k) {
                a[r][k] -= f * a[c][k];
                inv[r][k] -= f * inv[c][k];
            }
        }
    }
    return inv;
}

double logdet(Mat a) {
    double s = 0.0;
    const std::size_t n = a.size();
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

// Stacked X, log Y and the full block-diagonal covariance.
struct Stacked {
    Mat x;
    std::vector<double> z;
    Mat v;
};

Stacked stack(const PanelDataset& d, double sigma2, double phi) {
    Stacked s;
    std::size_t offset = 0;
    const std::size_t total = d.num_observations();
    s.v.assign(total, std::vector<double>(total, 0.0));
    for (const Group& g : d.groups()) {
        for (std::size_t j = 0; j < g.size(); ++j) {
            std::vector<double> row;
            for (std::size_t c = 0; c < g.design.cols(); ++c) row.push_back(g.design(j, c));
            s.x.push_back(row);
            s.z.push_back(std::log(g.responses[j]));
            for (std::size_t k = 0; k < g.size(); ++k)
                s.v[offset + j][offset + k] = sigma2 + (j == k ? phi * phi : 0.0);
        }
        offset += g.size();
    }
    return s;
}

std::vector<double> dense_gls(const PanelDataset& d, double sigma2, double phi) {
    const Stacked s = stack(d, sigma2, phi);
    const Mat vi = invert(s.v);
    const std::size_t n = s.z.size(), p = s.x[0].size();
    Mat xtvx(p, std::vector<double>(p, 0.0));
    std::vector<double> xtvz(p, 0.0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < p; ++c) {
                xtvz[c] += s.x[a][c] * vi[a][b] * s.z[b];
                for (std::size_t e = 0; e < p; ++e) xtvx[c][e] += s.x[a][c] * vi[a][b] * s.x[b][e];
            }
    const Mat inv = invert(xtvx);
    std::vector<double> beta(p, 0.0);
    for (std::size_t c = 0; c < p; ++c)
        for (std::size_t e = 0; e < p; ++e) beta[c] += inv[c][e] * xtvz[e];
    return beta;
}

Group make_group(const std::string& id, std::vector<double> y, std::vector<double> x) {
    Group g;
    g.id = id;
    g.responses = std::move(y);
    g.design = DenseMatrix(x.size(), 2);
    for (std::size_t j = 0; j < x.size(); ++j) {
        g.design(j, 0) = 1.0;
        g.design(j, 1) = x[j];
    }
    return g;
}

}  // namespace

TEST_CASE("compound symmetry inverse matches the dense inverse") {
    for (std::size_t n : {1u, 2u, 5u, 12u}) {
        for (double s2 : {0.0, 0.3, 4.0}) {
            const double phi = 0.7;
            Mat v(n, std::vector<double>(n, s2));
            for (std::size_t j = 0; j < n; ++j) v[j][j] += phi * phi;
            const Mat inv = invert(v);
            const DenseMatrix w = compound_symmetry_inverse(n, s2, phi);
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b) CHECK(std::abs(w(a, b) - inv[a][b]) < 1e-10);
        }
    }
}

TEST_CASE("sigma2 = 0 reduces to least squares on log Y") {
    const PanelDataset d = panel(6, 5, 0);
    LseConfig cfg;
    cfg.sigma2_mode = Sigma2Mode::Known;
    cfg.sigma2_known = 0.0;
    const LseFit f = lse_fit(d, cfg);
    const std::vector<double> ols = log_ols(d);
    for (std::size_t c = 0; c < ols.size(); ++c) CHECK(f.beta_hat[c] == doctest::Approx(ols[c]).epsilon(1e-10));
    for (double nu : f.nu_blup) CHECK(nu == 0.0);
}

TEST_CASE("GLS beta matches the dense block-diagonal solve") {
    const PanelDataset d = panel(4, 5, 1);
    for (double s2 : {0.1, 1.0, 10.0}) {
        const std::vector<double> fast = lse_gls_beta(d, s2, kLseDefaultPhi);
        const std::vector<double> slow = dense_gls(d, s2, kLseDefaultPhi);
        for (std::size_t c = 0; c < fast.size(); ++c) CHECK(fast[c] == doctest::Approx(slow[c]).epsilon(1e-9));
    }
}

TEST_CASE("hand-solved two-group GLS") {
    // Two groups of two; x = (0, 1) in each. The design is balanced, so GLS
    // equals OLS for any sigma2: slope = mean difference, intercept = mean at x = 0.
    const PanelDataset d({make_group("a", {std::exp(1.0), std::exp(3.0)}, {0.0, 1.0}),
                          make_group("b", {std::exp(2.0), std::exp(2.0)}, {0.0, 1.0})});
    for (double s2 : {0.0, 0.5, 5.0}) {
        const std::vector<double> b = lse_gls_beta(d, s2, 1.0);
        CHECK(b[0] == doctest::Approx(1.5).epsilon(1e-12));
        CHECK(b[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Unbalanced: group b only at x = 0. With sigma2 -> infinity the slope comes
    // from group a alone (within estimator): 3 - 1 = 2.
    const PanelDataset u({make_group("a", {std::exp(1.0), std::exp(3.0)}, {0.0, 1.0}),
                          make_group("b", {std::exp(5.0), std::exp(7.0)}, {0.0, 0.0})});
    CHECK(lse_gls_beta(u, 1e8, 1.0)[1] == doctest::Approx(2.0).epsilon(1e-6));
    // sigma2 = 0: OLS slope = 3 - mean(1, 5, 7) = 3 - 13/3.
    CHECK(lse_gls_beta(u, 0.0, 1.0)[1] == doctest::Approx(3.0 - 13.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("large sigma2 gives the within-group estimator") {
    const PanelDataset d = panel(8, 6, 2);
    const std::vector<double> b = lse_gls_beta(d, 1e8, kLseDefaultPhi);
    // Oracle: OLS of demeaned log Y on demeaned covariates (no intercept).
    const std::size_t p = d.group(0).design.cols();
    Mat xtx(p - 1, std::vector<double>(p - 1, 0.0));
    std::vector<double> xty(p - 1, 0.0);
    for (const Group& g : d.groups()) {
        const std::size_t n = g.size();
        std::vector<double> xm(p, 0.0);
        double zm = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            zm += std::log(g.responses[j]) / n;
            for (std::size_t c = 1; c < p; ++c) xm[c] += g.design(j, c) / n;
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double z = std::log(g.responses[j]) - zm;
            for (std::size_t a = 1; a < p; ++a) {
                const double xa = g.design(j, a) - xm[a];
                xty[a - 1] += xa * z;
                for (std::size_t c = 1; c < p; ++c) xtx[a - 1][c - 1] += xa * (g.design(j, c) - xm[c]);
            }
        }
    }
    const Mat inv = invert(xtx);
    for (std::size_t a = 0; a + 1 < p; ++a) {
        double w = 0.0;
        for (std::size_t c = 0; c + 1 < p; ++c) w += inv[a][c] * xty[c];
        CHECK(b[a + 1] == doctest::Approx(w).epsilon(1e-6));
    }
}

TEST_CASE("profile log-likelihood matches the dense Gaussian density") {
    const PanelDataset d = panel(3, 4, 3);
    const double s2 = 0.8, phi = kLseDefaultPhi;
    const std::vector<double> beta = dense_gls(d, s2, phi);
    const Stacked s = stack(d, s2, phi);
    const Mat vi = invert(s.v);
    const std::size_t n = s.z.size();
    std::vector<double> r(n);
    for (std::size_t a = 0; a < n; ++a) {
        r[a] = s.z[a];
        for (std::size_t c = 0; c < beta.size(); ++c) r[a] -= s.x[a][c] * beta[c];
    }
    double quad = 0.0;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) quad += r[a] * vi[a][b] * r[b];
    const double expected = -0.5 * (n * std::log(2 * std::numbers::pi) + logdet(s.v) + quad);
    CHECK(lse_profile_loglik(d, s2, phi) == doctest::Approx(expected).epsilon(1e-11));
}

TEST_CASE("estimated sigma2 maximises the profile likelihood") {
    const PanelDataset d = panel(10, 10, 4);
    const LseFit f = lse_fit(d);
    CHECK_FALSE(f.sigma2_bound_hit);
    double best = -1e300, best_s = 0.0;
    for (double s = -5.0; s <= 3.0; s += 1e-3) {
        const double v = lse_profile_loglik(d, std::exp(s), kLseDefaultPhi);
        if (v > best) {
            best = v;
            best_s = s;
        }
    }
    CHECK(std::abs(std::log(f.sigma2_hat) - best_s) < 2e-3);
    CHECK(f.loglik >= best - 1e-9);
}

TEST_CASE("BLUP shrinkage lies in [0, 1) and grows with n") {
    const double phi = kLseDefaultPhi;
    for (double s2 : {0.01, 1.0, 100.0}) {
        double prev = -1.0;
        for (int n : {1, 2, 5, 20, 100}) {
            LseConfig cfg;
            cfg.sigma2_mode = Sigma2Mode::Known;
            cfg.sigma2_known = s2;
            const PanelDataset d = panel(5, n, 0, 8);
            const LseFit f = lse_fit(d, cfg);
            const std::vector<double> eta = linear_predictor(d.group(0), f.beta_hat);
            double mean_resid = 0.0;
            for (int j = 0; j < n; ++j) mean_resid += (std::log(d.group(0).responses[j]) - eta[j]) / n;
            const double shrink = f.nu_blup[0] / mean_resid;
            CHECK(shrink >= 0.0);
            CHECK(shrink < 1.0);
            CHECK(shrink == doctest::Approx(n * s2 / (phi * phi + n * s2)).epsilon(1e-10));
            CHECK(shrink > prev);
            prev = shrink;
        }
    }
}

TEST_CASE("prediction") {
    LseFit f;
    f.beta_hat = {1.0, 0.5};
    f.group_ids = {"a", "b"};
    f.nu_blup = {0.2, -0.3};
    const std::vector<double> x{1.0, 2.0};
    CHECK(lse_predict(f, "a", x) == doctest::Approx(std::exp(2.2)).epsilon(1e-15));
    CHECK(lse_predict(f, "b", x) == doctest::Approx(std::exp(1.7)).epsilon(1e-15));
    CHECK(lse_predict(f, "zzz", x) == doctest::Approx(std::exp(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(lse_predict(f, "zzz", x, true), UnknownGroup);
    CHECK_THROWS_AS(lse_predict(f, "a", std::vector<double>{1.0}), DimensionMismatch);
}

TEST_CASE("invalid settings are rejected") {
    const PanelDataset d = panel(3, 3, 0);
    LseConfig cfg;
    cfg.phi = 0.0;
    CHECK_THROWS_AS(lse_fit(d, cfg), DomainError);
    cfg = {};
    cfg.sigma2_mode = Sigma2Mode::Known;
    cfg.sigma2_known = -1.0;
    CHECK_THROWS_AS(lse_fit(d, cfg), DomainError);
}
