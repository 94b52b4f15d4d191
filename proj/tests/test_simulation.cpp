#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hre/errors.hpp"
#include "hre/estimator.hpp"
#include "hre/simulation.hpp"

using namespace hre;

namespace {

constexpr double kC = 0.5941289;

double s_density(double s) { return std::exp(2.0 - 2.0 * std::cosh(s)); }  // unnormalised

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    for (double x : v) m.mean += x / v.size();
    for (double x : v) m.var += (x - m.mean) * (x - m.mean) / (v.size() - 1);
    return m;
}

std::vector<double> log_draws(ErrorLaw law, int n, std::uint64_t seed) {
    RngStream rng(seed, 0);
    std::vector<double> out(n);
    for (double& x : out) x = std::log(sample_error(law, rng));
    return out;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[(v.size() - 1) / 2] + v[v.size() / 2]);
}

SimSpec small_spec(int reps) {
    SimSpec spec;
    spec.K = 5;
    spec.n_i = 4;
    spec.reps = reps;
    spec.base_seed = 21;
    return spec;
}

}  // namespace

TEST_CASE("E1 normalising constant by direct integration") {
    const double h = 1e-4;
    double mass = 0.0;
    for (double s = -10.0; s <= 10.0; s += h) mass += s_density(s) * h;
    CHECK(kC * mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("E1 sampler envelope dominates the target") {
    const E1Sampler sampler;
    for (double s = -6.0; s <= 6.0; s += 1e-3) CHECK(sampler.log_ratio(s) <= sampler.log_envelope() + 1e-12);
}

TEST_CASE("E1 draws match the log-scale law") {
    const int n = 1000000;
    std::vector<double> s = log_draws(ErrorLaw::E1, n, 123);
    const Moments m = moments(s);

    // Oracle moments and CDF on a grid.
    const double h = 1e-4, lo = -8.0;
    std::vector<double> cdf;
    double mass = 0.0, second = 0.0;
    for (double x = lo; x <= 8.0; x += h) {
        const double w = s_density(x + 0.5 * h) * h;
        mass += w;
        second += (x + 0.5 * h) * (x + 0.5 * h) * w;
        cdf.push_back(mass);
    }
    for (double& c : cdf) c /= mass;
    const double sd = std::sqrt(second / mass);
    CHECK(sd == doctest::Approx(0.6439).epsilon(1e-3));
    CHECK(std::abs(m.mean) < 4 * sd / std::sqrt(double(n)));
    CHECK(std::sqrt(m.var) == doctest::Approx(sd).epsilon(3e-3));

    std::sort(s.begin(), s.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(std::clamp((s[i] - lo) / h, 0.0, double(cdf.size() - 1)));
        const double f = cdf[k];
        ks = std::max({ks, std::abs(f - double(i) / n), std::abs(f - double(i + 1) / n)});
    }
    CHECK(ks <= 0.002);
}

TEST_CASE("E2 draws are log-normal with median one") {
    const std::vector<double> s = log_draws(ErrorLaw::E2, 1000000, 5);
    const Moments m = moments(s);
    CHECK(std::abs(m.var - 0.414) < 0.005);
    CHECK(std::abs(median(s)) < 0.005);
}

TEST_CASE("E3 draws are log-uniform on [-2, 2]") {
    const std::vector<double> s = log_draws(ErrorLaw::E3, 1000000, 6);
    const Moments m = moments(s);
    CHECK(m.var == doctest::Approx(4.0 / 3.0).epsilon(5e-3));
    CHECK(std::abs(m.mean) < 0.01);
    CHECK(*std::min_element(s.begin(), s.end()) >= -2.0);
    CHECK(*std::max_element(s.begin(), s.end()) <= 2.0);
}

TEST_CASE("error law names") {
    CHECK(parse_error_law("E1") == ErrorLaw::E1);
    CHECK(parse_error_law("e3") == ErrorLaw::E3);
    CHECK(to_string(ErrorLaw::E2) == "E2");
    CHECK_THROWS_AS(parse_error_law("E4"), DomainError);
}

TEST_CASE("generated panels have the study design") {
    SimSpec spec = small_spec(3);
    const PanelDataset d = generate(spec, 2);
    CHECK(d.num_groups() == 5);
    CHECK(d.num_observations() == 20);
    for (const Group& g : d.groups())
        for (std::size_t j = 0; j < g.size(); ++j) {
            CHECK(g.design(j, 0) == 1.0);
            for (std::size_t c = 1; c < 4; ++c) {
                CHECK(g.design(j, c) > 0.0);
                CHECK(g.design(j, c) < 1.0);
            }
            CHECK(g.responses[j] > 0.0);
        }
    CHECK_THROWS_AS(generate(spec, 3), DomainError);
    spec.K = 0;
    CHECK_THROWS_AS(generate(spec, 0), DomainError);
}

TEST_CASE("generation is deterministic and addressable by replication") {
    SimSpec spec = small_spec(10);
    const PanelDataset a = generate(spec, 7);
    const PanelDataset b = generate(spec, 7);
    const PanelDataset c = generate(spec, 6);
    for (std::size_t i = 0; i < a.num_groups(); ++i) {
        CHECK(a.group(i).responses == b.group(i).responses);
        CHECK(a.group(i).responses != c.group(i).responses);
    }
    spec.reps = 500;  // the replication count does not change a replication
    CHECK(generate(spec, 7).group(0).responses == a.group(0).responses);
}

TEST_CASE("log-scale least squares is consistent on a large panel") {
    SimSpec spec;
    spec.error_law = ErrorLaw::E2;
    spec.K = 200;
    spec.n_i = 50;
    spec.reps = 1;
    spec.base_seed = 8;
    const std::vector<double> b = log_ols(generate(spec, 0));
    // Intercept absorbs the mean of nu (sd 1/sqrt(200)); slopes see only within noise.
    CHECK(std::abs(b[0] - 2.0) < 4.0 / std::sqrt(200.0));
    for (std::size_t c = 1; c < 4; ++c) CHECK(std::abs(b[c] - spec.beta_true[c]) < 0.1);
}

TEST_CASE("one replication is flagged as degenerate") {
    const SimSummary s = run_study(small_spec(1));
    CHECK(s.degenerate);
    for (const MethodSummary& m : s.methods)
        for (const CellSummary& c : m.cells) CHECK_FALSE(c.sd.has_value());
}

TEST_CASE("replications do not depend on the thread count") {
    const SimSpec spec = small_spec(12);
    const auto one = run_replications(spec, 1);
    const auto four = run_replications(spec, 4);
    REQUIRE(one.size() == four.size());
    for (std::size_t r = 0; r < one.size(); ++r) {
        CHECK(one[r].rep == static_cast<int>(r));
        CHECK(one[r].hre.beta == four[r].hre.beta);
        CHECK(one[r].lse.beta == four[r].lse.beta);
        CHECK(one[r].hre.sigma2 == four[r].hre.sigma2);
    }
}

TEST_CASE("summary statistics match the replications") {
    const SimSpec spec = small_spec(15);
    const auto reps = run_replications(spec, 2);
    const SimSummary s = summarize(spec, reps);
    CHECK_FALSE(s.degenerate);
    const MethodSummary& hre = s.methods.at(0);
    CHECK(hre.method == "HRE");
    std::vector<double> b1;
    for (const auto& r : reps)
        if (r.hre.ok) b1.push_back(r.hre.beta[1]);
    const Moments m = moments(b1);
    const CellSummary& cell = hre.cells.at(1);
    CHECK(cell.reps_used == static_cast<int>(b1.size()));
    CHECK(cell.mean == doctest::Approx(m.mean).epsilon(1e-13));
    REQUIRE(cell.sd.has_value());
    CHECK(*cell.sd == doctest::Approx(std::sqrt(m.var)).epsilon(1e-12));
}
