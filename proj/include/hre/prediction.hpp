#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hre/estimator.hpp"
#include "hre/lse.hpp"
#include "hre/model.hpp"

namespace hre {

struct SplitSpec {
    double train_fraction = 2.0 / 3.0;
    bool stratify_by_group = true;
    std::uint64_t seed = 1;
    // Distinguishes repeated splits drawn under one seed.
    std::uint32_t replicate = 0;
};

struct PredictionReport {
    double mpe = 0.0;   // median |Y - Yhat|
    double mppe = 0.0;  // median (Y - Yhat)^2 / (Y Yhat)
    double mape = 0.0;  // median |Y - Yhat|/Y + |Y - Yhat|/Yhat
    double mspe = 0.0;  // median (Y - Yhat)^2
    std::size_t n_test = 0;
};

// Midpoint of the two central order statistics for even counts.
double median(std::vector<double> values);

// Stratified split: within each group ceil(fraction * n_i) observations go
// to training, chosen without replacement from a stream keyed by
// (seed, replicate, group index). Observation order is preserved. Throws
// GroupTooSmall when a group cannot contribute to both sides.
std::pair<PanelDataset, PanelDataset> split(const PanelDataset& data, const SplitSpec& spec);

PredictionReport evaluate(std::span<const double> predicted, std::span<const double> actual);

struct MethodPrediction {
    std::string method;
    PredictionReport report;
    std::vector<double> beta_hat;
    double sigma2_hat = 0.0;
    bool converged = true;
};

struct BenchmarkResult {
    SplitSpec split;
    MethodPrediction hre;
    MethodPrediction lse;
};

// Fits HRE and LSE on the training part of one split and scores predictions
// exp(X beta_hat + nu_hat_i) on the test part.
BenchmarkResult benchmark(const PanelDataset& data, const SplitSpec& split_spec,
                          const FitConfig& hre_config = {}, const LseConfig& lse_config = {});

// HRE-vs-LSE predictions for constant-per-method predictors (test support).
std::vector<double> predict_hre(const FitResult& fit, const PanelDataset& train,
                                const PanelDataset& test);
std::vector<double> predict_lse(const LseFit& fit, const PanelDataset& test);

struct WinRates {
    double mpe = 0.0;
    double mppe = 0.0;
    double mape = 0.0;
    double mspe = 0.0;
};

struct MultiSplitResult {
    std::vector<BenchmarkResult> splits;
    WinRates hre_win_rate;  // fraction of splits with HRE index strictly below LSE
};

// Repeats benchmark over replicates 0..splits-1 of the base split spec.
// Results are in replicate order whatever the thread count.
MultiSplitResult benchmark_splits(const PanelDataset& data, const SplitSpec& base, int splits,
                                  const FitConfig& hre_config = {},
                                  const LseConfig& lse_config = {}, int threads = 1);

}  // namespace hre
