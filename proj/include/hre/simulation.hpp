#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hre/model.hpp"
#include "hre/rng.hpp"

namespace hre {

enum class ErrorLaw { E1, E2, E3 };

std::string to_string(ErrorLaw law);
// Accepts "E1", "e1", ... ; throws DomainError otherwise.
ErrorLaw parse_error_law(const std::string& text);

// Log-scale variance of the E2 (log-normal) law.
inline constexpr double kE2LogVariance = 0.414;
// Half-width of the log-uniform E3 law.
inline constexpr double kE3HalfWidth = 2.0;

// Draws from the efficient error law f(t) = c exp{-t - 1/t - log t + 2}:
// S = log t has density c exp(2 - 2 cosh s), sampled by rejection from a
// Normal(0, phi^2) proposal with the envelope constant found numerically.
class E1Sampler {
public:
    explicit E1Sampler(double proposal_sd = 0.6434);

    double draw(RngStream& stream) const;
    double log_envelope() const { return log_m_; }
    double proposal_sd() const { return sd_; }
    // log g(s) - log q(s)
    double log_ratio(double s) const;

private:
    double sd_;
    double log_c_;
    double log_m_;
};

double sample_e1(RngStream& stream);
double sample_e2(RngStream& stream);
double sample_e3(RngStream& stream);
double sample_error(ErrorLaw law, RngStream& stream);

struct SimSpec {
    ErrorLaw error_law = ErrorLaw::E1;
    int K = 10;
    int n_i = 10;
    std::vector<double> beta_true{2.0, 2.0, 1.0, 1.0};
    double sigma2_true = 1.0;
    int reps = 500;
    Sigma2Mode sigma2_mode = Sigma2Mode::Known;  // Known uses sigma2_true
    std::uint64_t base_seed = 42;
};

// Replication `rep` of the design: X_ij = (1, U, ..., U) with i.i.d.
// Uniform(0,1) covariates, nu_i ~ N(0, sigma2_true), eps from the chosen
// law. Uses RngStream(base_seed, rep), so any replication can be generated
// independently of the others.
PanelDataset generate(const SimSpec& spec, int rep);

struct MethodEstimate {
    bool ok = false;
    std::vector<double> beta;
    double sigma2 = 0.0;
    std::vector<double> se_beta;
    int iterations = 0;
    std::string failure;
};

struct ReplicationResult {
    int rep = 0;
    MethodEstimate hre;
    MethodEstimate lse;
};

// Fits HRE and LSE on every replication. Results are indexed by replication
// and independent of `threads`.
std::vector<ReplicationResult> run_replications(const SimSpec& spec, int threads = 1);

struct CellSummary {
    std::string parameter;
    double mean = 0.0;
    std::optional<double> sd;  // empty when fewer than two replications
    int reps_used = 0;
};

struct MethodSummary {
    std::string method;
    std::vector<CellSummary> cells;
    int failures = 0;
};

struct SimSummary {
    SimSpec spec;
    std::vector<MethodSummary> methods;
    bool degenerate = false;     // reps == 1: SDs undefined
    double wall_time_seconds = 0.0;
};

SimSummary summarize(const SimSpec& spec, const std::vector<ReplicationResult>& results);
SimSummary run_study(const SimSpec& spec, int threads = 1);

}  // namespace hre
