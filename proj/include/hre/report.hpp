#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hre/estimator.hpp"
#include "hre/lse.hpp"
#include "hre/prediction.hpp"
#include "hre/simulation.hpp"

namespace hre {

inline constexpr const char* kToolVersion = "0.1.0";

// Header block embedded in every output: tool version, command, the flags
// that determine the content and the dataset digest (when there is data).
nlohmann::ordered_json make_meta(const std::string& command, const nlohmann::ordered_json& flags,
                                 const std::optional<std::string>& digest);

// Column labels "(Intercept)", then the covariate names.
std::vector<std::string> coefficient_names(const std::vector<std::string>& covariates);

struct OracleReport {
    double marginal_quadrature = 0.0;
    double laplace_first = 0.0;
    std::optional<double> laplace_second;  // empty when some C_i >= 1
    double gap_first = 0.0;                // laplace_first - marginal_quadrature
    std::optional<double> gap_second;
};

OracleReport oracle_report(const PanelDataset& data, const FitResult& fit);

nlohmann::ordered_json hre_fit_json(const FitResult& fit, const PanelDataset& data,
                                    const std::vector<std::string>& names, Sigma2Mode mode,
                                    const std::optional<OracleReport>& oracle);
nlohmann::ordered_json lse_fit_json(const LseFit& fit, const std::vector<std::string>& names,
                                    Sigma2Mode mode);

// Simulation summaries. CSV schema: method,error_law,K,n_i,parameter,mean,sd,reps_used
nlohmann::ordered_json sim_summary_json(const SimSummary& summary);
std::string sim_summary_csv(const SimSummary& summary);
std::string sim_summary_text(const SimSummary& summary);

// Benchmark results. CSV schema: split_seed,replicate,method,index,value
nlohmann::ordered_json benchmark_json(const MultiSplitResult& result);
std::string benchmark_csv(const MultiSplitResult& result);
std::string benchmark_text(const MultiSplitResult& result);

// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace hre
