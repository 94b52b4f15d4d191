#include "hre/prediction.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "hre/errors.hpp"
#include "hre/rng.hpp"

namespace hre {

double median(std::vector<double> values) {
    if (values.empty()) throw DomainError("median of an empty vector");
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (n % 2 == 1) return upper;
    const double lower =
        *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

namespace {

// Uniformly random k-subset of {0..n-1} in increasing order.
std::vector<std::size_t> choose_subset(std::size_t n, std::size_t k, RngStream& stream) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t span = n - i;
        const std::size_t pick = i + std::min(span - 1, static_cast<std::size_t>(
                                                            rng_uniform(stream) * static_cast<double>(span)));
        std::swap(idx[i], idx[pick]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::size_t train_count(double fraction, std::size_t n) {
    // Guard against 2/3 * 6 landing a hair above 4.
    return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

Group take_rows(const Group& g, const std::vector<std::size_t>& rows) {
    Group out;
    out.id = g.id;
    out.design = DenseMatrix(rows.size(), g.design.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.responses.push_back(g.responses[rows[r]]);
        const auto src = g.design.row(rows[r]);
        std::copy(src.begin(), src.end(), out.design.row(r).begin());
    }
    return out;
}

std::uint64_t stream_id(const SplitSpec& spec, std::size_t group_index) {
    return (static_cast<std::uint64_t>(spec.replicate) << 32) | static_cast<std::uint64_t>(group_index);
}

}  // namespace

std::pair<PanelDataset, PanelDataset> split(const PanelDataset& data, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw DomainError("split: train fraction must lie in (0, 1)");
    std::vector<Group> train, test;
    if (spec.stratify_by_group) {
        for (std::size_t i = 0; i < data.num_groups(); ++i) {
            const Group& g = data.group(i);
            const std::size_t n = g.size();
            const std::size_t k = train_count(spec.train_fraction, n);
            if (n < 2 || k < 1 || k >= n)
                throw GroupTooSmall("split: group '" + g.id + "' has " + std::to_string(n) +
                                    " observations; cannot place " + std::to_string(k) +
                                    " in training and keep a test observation");
            RngStream stream(spec.seed, stream_id(spec, i));
            const std::vector<std::size_t> chosen = choose_subset(n, k, stream);
            std::vector<std::size_t> rest;
            for (std::size_t j = 0, c = 0; j < n; ++j) {
                if (c < chosen.size() && chosen[c] == j) {
                    ++c;
                } else {
                    rest.push_back(j);
                }
            }
            train.push_back(take_rows(g, chosen));
            test.push_back(take_rows(g, rest));
        }
    } else {
        // Pooled split; a group may end up on one side only.
        const std::size_t n = data.num_observations();
        const std::size_t k = train_count(spec.train_fraction, n);
        if (k < 1 || k >= n) throw GroupTooSmall("split: dataset too small for this fraction");
        RngStream stream(spec.seed, stream_id(spec, 0xFFFFFFFFu));
        const std::vector<std::size_t> chosen = choose_subset(n, k, stream);
        std::size_t flat = 0, c = 0;
        for (const Group& g : data.groups()) {
            std::vector<std::size_t> tr, te;
            for (std::size_t j = 0; j < g.size(); ++j, ++flat) {
                if (c < chosen.size() && chosen[c] == flat) {
                    tr.push_back(j);
                    ++c;
                } else {
                    te.push_back(j);
                }
            }
            if (!tr.empty()) train.push_back(take_rows(g, tr));
            if (!te.empty()) test.push_back(take_rows(g, te));
        }
    }
    return {PanelDataset(std::move(train)), PanelDataset(std::move(test))};
}

PredictionReport evaluate(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size() || predicted.empty())
        throw DimensionMismatch("evaluate: need equal, non-zero lengths");
    const std::size_t n = actual.size();
    std::vector<double> abs_err(n), prod_rel(n), add_rel(n), sq_err(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double y = actual[k];
        const double yhat = predicted[k];
        if (!(y > 0.0) || !(yhat > 0.0)) throw DomainError("evaluate: values must be positive");
        const double d = std::abs(y - yhat);
        abs_err[k] = d;
        prod_rel[k] = d * d / (y * yhat);
        add_rel[k] = d / y + d / yhat;
        sq_err[k] = d * d;
    }
    PredictionReport r;
    r.mpe = median(std::move(abs_err));
    r.mppe = median(std::move(prod_rel));
    r.mape = median(std::move(add_rel));
    r.mspe = median(std::move(sq_err));
    r.n_test = n;
    return r;
}

std::vector<double> predict_hre(const FitResult& fit, const PanelDataset& train,
                                const PanelDataset& test) {
    std::vector<double> out;
    for (const Group& g : test.groups()) {
        double nu = 0.0;
        for (std::size_t i = 0; i < train.num_groups(); ++i)
            if (train.group(i).id == g.id) nu = fit.nu_hat[i];
        for (std::size_t j = 0; j < g.size(); ++j)
            out.push_back(std::exp(dot(g.design.row(j), fit.beta_hat) + nu));
    }
    return out;
}

std::vector<double> predict_lse(const LseFit& fit, const PanelDataset& test) {
    std::vector<double> out;
    for (const Group& g : test.groups())
        for (std::size_t j = 0; j < g.size(); ++j)
            out.push_back(lse_predict(fit, g.id, g.design.row(j)));
    return out;
}

BenchmarkResult benchmark(const PanelDataset& data, const SplitSpec& split_spec,
                          const FitConfig& hre_config, const LseConfig& lse_config) {
    const auto [train, test] = split(data, split_spec);
    std::vector<double> actual;
    for (const Group& g : test.groups()) actual.insert(actual.end(), g.responses.begin(), g.responses.end());

    BenchmarkResult res;
    res.split = split_spec;

    const FitResult hf = fit(train, hre_config);
    res.hre.method = "HRE";
    res.hre.report = evaluate(predict_hre(hf, train, test), actual);
    res.hre.beta_hat = hf.beta_hat;
    res.hre.sigma2_hat = hf.sigma2_hat;
    res.hre.converged = hf.converged;

    const LseFit lf = lse_fit(train, lse_config);
    res.lse.method = "LSE";
    res.lse.report = evaluate(predict_lse(lf, test), actual);
    res.lse.beta_hat = lf.beta_hat;
    res.lse.sigma2_hat = lf.sigma2_hat;
    return res;
}

MultiSplitResult benchmark_splits(const PanelDataset& data, const SplitSpec& base, int splits,
                                  const FitConfig& hre_config, const LseConfig& lse_config,
                                  int threads) {
    if (splits < 1) throw DomainError("benchmark_splits: need at least one split");
    MultiSplitResult out;
    out.splits.resize(static_cast<std::size_t>(splits));
    std::atomic<int> next{0};
    auto work = [&]() {
        for (int r = next.fetch_add(1); r < splits; r = next.fetch_add(1)) {
            SplitSpec s = base;
            s.replicate = base.replicate + static_cast<std::uint32_t>(r);
            out.splits[static_cast<std::size_t>(r)] = benchmark(data, s, hre_config, lse_config);
        }
    };
    const int workers = std::max(1, std::min(threads, splits));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    int mpe = 0, mppe = 0, mape = 0, mspe = 0;
    for (const BenchmarkResult& b : out.splits) {
        mpe += b.hre.report.mpe < b.lse.report.mpe;
        mppe += b.hre.report.mppe < b.lse.report.mppe;
        mape += b.hre.report.mape < b.lse.report.mape;
        mspe += b.hre.report.mspe < b.lse.report.mspe;
    }
    const double r = static_cast<double>(splits);
    out.hre_win_rate = {mpe / r, mppe / r, mape / r, mspe / r};
    return out;
}

}  // namespace hre
