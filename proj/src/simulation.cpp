#include "hre/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <thread>

#include "hre/errors.hpp"
#include "hre/estimator.hpp"
#include "hre/lse.hpp"
#include "hre/optimize.hpp"

namespace hre {

std::string to_string(ErrorLaw law) {
    switch (law) {
        case ErrorLaw::E1: return "E1";
        case ErrorLaw::E2: return "E2";
        case ErrorLaw::E3: return "E3";
    }
    return "?";
}

ErrorLaw parse_error_law(const std::string& text) {
    if (text == "E1" || text == "e1") return ErrorLaw::E1;
    if (text == "E2" || text == "e2") return ErrorLaw::E2;
    if (text == "E3" || text == "e3") return ErrorLaw::E3;
    throw DomainError("unknown error law '" + text + "' (expected E1, E2 or E3)");
}

E1Sampler::E1Sampler(double proposal_sd) : sd_(proposal_sd), log_c_(std::log(normalize_constant())) {
    // The ratio is even in s; scan [0, 8] then polish the best cell.
    double best_s = 0.0;
    double best = log_ratio(0.0);
    constexpr int kGrid = 8000;
    for (int k = 1; k <= kGrid; ++k) {
        const double s = 8.0 * k / kGrid;
        const double v = log_ratio(s);
        if (v > best) {
            best = v;
            best_s = s;
        }
    }
    const double h = 8.0 / kGrid;
    const Maximum1d polished = maximize_golden([this](double s) { return log_ratio(s); },
                                               {std::max(0.0, best_s - h), best_s + h}, 1e-12);
    // Small safety margin on the envelope; a bound that is slightly loose
    // keeps the sampler exact.
    log_m_ = std::max(best, polished.value) + 1e-12;
}

double E1Sampler::log_ratio(double s) const {
    const double log_g = log_c_ + 2.0 - 2.0 * std::cosh(s);
    const double log_q =
        -0.5 * (s / sd_) * (s / sd_) - std::log(sd_ * std::sqrt(2.0 * std::numbers::pi));
    return log_g - log_q;
}

double E1Sampler::draw(RngStream& stream) const {
    for (;;) {
        const double s = sd_ * rng_normal(stream);
        const double u = rng_uniform(stream);
        if (std::log(u) <= log_ratio(s) - log_m_) return std::exp(s);
    }
}

double sample_e1(RngStream& stream) {
    static const E1Sampler sampler;
    return sampler.draw(stream);
}

double sample_e2(RngStream& stream) {
    return std::exp(std::sqrt(kE2LogVariance) * rng_normal(stream));
}

double sample_e3(RngStream& stream) {
    return std::exp(-kE3HalfWidth + 2.0 * kE3HalfWidth * rng_uniform(stream));
}

double sample_error(ErrorLaw law, RngStream& stream) {
    switch (law) {
        case ErrorLaw::E1: return sample_e1(stream);
        case ErrorLaw::E2: return sample_e2(stream);
        case ErrorLaw::E3: return sample_e3(stream);
    }
    throw DomainError("unknown error law");
}

PanelDataset generate(const SimSpec& spec, int rep) {
    if (spec.K < 1 || spec.n_i < 1) throw DomainError("generate: K and n_i must be >= 1");
    if (spec.beta_true.empty()) throw DomainError("generate: beta_true is empty");
    if (rep < 0 || rep >= spec.reps) throw DomainError("generate: replication index out of range");
    RngStream stream(spec.base_seed, static_cast<std::uint64_t>(rep));
    const std::size_t p = spec.beta_true.size();
    const double sigma = std::sqrt(spec.sigma2_true);
    std::vector<Group> groups;
    groups.reserve(static_cast<std::size_t>(spec.K));
    for (int i = 0; i < spec.K; ++i) {
        Group g;
        g.id = std::to_string(i + 1);
        g.design = DenseMatrix(static_cast<std::size_t>(spec.n_i), p);
        const double nu = sigma * rng_normal(stream);
        for (int j = 0; j < spec.n_i; ++j) {
            auto x = g.design.row(static_cast<std::size_t>(j));
            x[0] = 1.0;
            for (std::size_t c = 1; c < p; ++c) x[c] = rng_uniform(stream);
            const double eta = dot(x, spec.beta_true) + nu;
            g.responses.push_back(std::exp(eta) * sample_error(spec.error_law, stream));
        }
        groups.push_back(std::move(g));
    }
    return PanelDataset(std::move(groups));
}

namespace {

ReplicationResult run_one(const SimSpec& spec, int rep) {
    ReplicationResult out;
    out.rep = rep;
    const PanelDataset data = generate(spec, rep);

    FitConfig hc;
    hc.sigma2_mode = spec.sigma2_mode;
    hc.sigma2_known = spec.sigma2_true;
    try {
        const FitResult f = fit(data, hc);
        out.hre.beta = f.beta_hat;
        out.hre.sigma2 = f.sigma2_hat;
        out.hre.se_beta = f.se_beta;
        out.hre.iterations = f.iterations;
        out.hre.ok = f.converged;
        if (!f.converged) out.hre.failure = f.warnings.empty() ? "not converged" : f.warnings.front();
    } catch (const Error& e) {
        out.hre.failure = e.what();
    }

    LseConfig lc;
    lc.sigma2_mode = spec.sigma2_mode;
    lc.sigma2_known = spec.sigma2_true;
    try {
        const LseFit f = lse_fit(data, lc);
        out.lse.beta = f.beta_hat;
        out.lse.sigma2 = f.sigma2_hat;
        out.lse.se_beta = f.se_beta;
        out.lse.ok = true;
    } catch (const Error& e) {
        out.lse.failure = e.what();
    }
    return out;
}

MethodSummary summarize_method(const std::string& name, const SimSpec& spec,
                               const std::vector<ReplicationResult>& results,
                               MethodEstimate ReplicationResult::*member) {
    MethodSummary m;
    m.method = name;
    const std::size_t p = spec.beta_true.size();
    std::vector<std::vector<double>> columns(p + 1);
    for (const ReplicationResult& r : results) {
        const MethodEstimate& e = r.*member;
        if (!e.ok) {
            ++m.failures;
            continue;
        }
        for (std::size_t c = 0; c < p; ++c) columns[c].push_back(e.beta[c]);
        columns[p].push_back(e.sigma2);
    }
    const std::size_t cells = spec.sigma2_mode == Sigma2Mode::Estimate ? p + 1 : p;
    for (std::size_t c = 0; c < cells; ++c) {
        CellSummary cell;
        cell.parameter = c < p ? "beta" + std::to_string(c) : "sigma2";
        const std::vector<double>& v = columns[c];
        cell.reps_used = static_cast<int>(v.size());
        if (!v.empty()) {
            double sum = 0.0;
            for (double x : v) sum += x;
            cell.mean = sum / static_cast<double>(v.size());
            if (v.size() >= 2) {
                double ss = 0.0;
                for (double x : v) ss += (x - cell.mean) * (x - cell.mean);
                cell.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
            }
        } else {
            cell.mean = NAN;
        }
        m.cells.push_back(std::move(cell));
    }
    return m;
}

}  // namespace

std::vector<ReplicationResult> run_replications(const SimSpec& spec, int threads) {
    if (spec.reps < 1) throw DomainError("run_study: reps must be >= 1");
    std::vector<ReplicationResult> results(static_cast<std::size_t>(spec.reps));
    const int workers = std::max(1, std::min(threads, spec.reps));
    std::atomic<int> next{0};
    auto work = [&]() {
        for (int rep = next.fetch_add(1); rep < spec.reps; rep = next.fetch_add(1))
            results[static_cast<std::size_t>(rep)] = run_one(spec, rep);
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    return results;
}

SimSummary summarize(const SimSpec& spec, const std::vector<ReplicationResult>& results) {
    SimSummary s;
    s.spec = spec;
    s.degenerate = spec.reps < 2;
    s.methods.push_back(summarize_method("HRE", spec, results, &ReplicationResult::hre));
    s.methods.push_back(summarize_method("LSE", spec, results, &ReplicationResult::lse));
    return s;
}

SimSummary run_study(const SimSpec& spec, int threads) {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<ReplicationResult> results = run_replications(spec, threads);
    SimSummary s = summarize(spec, results);
    s.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
}

}  // namespace hre
