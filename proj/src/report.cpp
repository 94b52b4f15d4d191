#include "hre/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hre/errors.hpp"
#include "hre/laplace.hpp"

namespace hre {

using ojson = nlohmann::ordered_json;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

ojson number_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

std::string sigma2_mode_name(Sigma2Mode m) { return m == Sigma2Mode::Known ? "known" : "estimate"; }

std::string fixed(double v, int decimals) {
    if (!std::isfinite(v)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

ojson coefficient_table(const std::vector<std::string>& names, const std::vector<double>& est,
                        const std::vector<double>& se) {
    ojson rows = ojson::array();
    for (std::size_t c = 0; c < est.size(); ++c) {
        ojson r;
        r["name"] = c < names.size() ? names[c] : "b" + std::to_string(c);
        r["estimate"] = number_or_null(est[c]);
        r["se"] = c < se.size() ? number_or_null(se[c]) : ojson(nullptr);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace

ojson make_meta(const std::string& command, const ojson& flags,
                const std::optional<std::string>& digest) {
    ojson m;
    m["tool"] = "hre";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["flags"] = flags;
    m["dataset_digest"] = digest ? ojson(*digest) : ojson(nullptr);
    return m;
}

std::vector<std::string> coefficient_names(const std::vector<std::string>& covariates) {
    std::vector<std::string> out{"(Intercept)"};
    out.insert(out.end(), covariates.begin(), covariates.end());
    return out;
}

OracleReport oracle_report(const PanelDataset& data, const FitResult& fit) {
    const ModelParams params{fit.beta_hat, fit.sigma2_hat, Sigma2Mode::Known};
    OracleReport r;
    r.marginal_quadrature = marginal_loglik_quadrature(data, params);
    r.laplace_first = marginal_loglik_laplace(data, params, LaplaceOrder::First);
    r.gap_first = r.laplace_first - r.marginal_quadrature;
    try {
        r.laplace_second = marginal_loglik_laplace(data, params, LaplaceOrder::Second);
        r.gap_second = *r.laplace_second - r.marginal_quadrature;
    } catch (const CorrectionTooLarge&) {
    }
    return r;
}

ojson hre_fit_json(const FitResult& fit, const PanelDataset& data,
                   const std::vector<std::string>& names, Sigma2Mode mode,
                   const std::optional<OracleReport>& oracle) {
    ojson j;
    j["method"] = "HRE";
    j["sigma2_mode"] = sigma2_mode_name(mode);
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["gradient_max_abs"] = fit.gradient_max_abs;
    j["coefficients"] = coefficient_table(names, fit.beta_hat, fit.se_beta);
    j["sigma2_hat"] = fit.sigma2_hat;
    ojson nu = ojson::array();
    for (std::size_t i = 0; i < fit.nu_hat.size(); ++i)
        nu.push_back({{"group", data.group(i).id}, {"nu_hat", fit.nu_hat[i]}});
    j["random_effects"] = std::move(nu);
    j["loglik"] = {{"h_likelihood", fit.logliks.h_lik},
                   {"p_nu_H", fit.logliks.p_nu_H},
                   {"p_beta_nu_H", fit.logliks.p_beta_nu_H}};
    ojson trace = ojson::array();
    for (const IterationTrace& t : fit.trace)
        trace.push_back({{"iteration", t.iteration},
                         {"beta", t.beta},
                         {"sigma2", t.sigma2},
                         {"p_nu_H", t.p_nu_H},
                         {"p_beta_nu_H", t.p_beta_nu_H},
                         {"gradient_max_abs", t.gradient_max_abs},
                         {"param_change", t.param_change}});
    j["trace"] = std::move(trace);
    ojson warnings = fit.warnings;
    if (oracle) {
        ojson o;
        o["marginal_loglik_quadrature"] = oracle->marginal_quadrature;
        o["laplace_first_order"] = oracle->laplace_first;
        o["laplace_second_order"] =
            oracle->laplace_second ? ojson(*oracle->laplace_second) : ojson(nullptr);
        o["gap_first_order"] = oracle->gap_first;
        o["gap_second_order"] = oracle->gap_second ? ojson(*oracle->gap_second) : ojson(nullptr);
        j["oracle"] = std::move(o);
        if (!oracle->laplace_second)
            warnings.push_back("second-order Laplace correction >= 1 in some group; not reported");
    }
    j["warnings"] = std::move(warnings);
    return j;
}

ojson lse_fit_json(const LseFit& fit, const std::vector<std::string>& names, Sigma2Mode mode) {
    ojson j;
    j["method"] = "LSE";
    j["sigma2_mode"] = sigma2_mode_name(mode);
    j["phi"] = fit.phi;
    j["coefficients"] = coefficient_table(names, fit.beta_hat, fit.se_beta);
    j["sigma2_hat"] = fit.sigma2_hat;
    ojson nu = ojson::array();
    for (std::size_t i = 0; i < fit.nu_blup.size(); ++i)
        nu.push_back({{"group", fit.group_ids[i]}, {"nu_blup", fit.nu_blup[i]}});
    j["random_effects"] = std::move(nu);
    j["loglik"] = fit.loglik;
    ojson warnings = ojson::array();
    if (fit.sigma2_bound_hit) warnings.push_back("sigma2 estimate on the boundary of the search interval");
    j["warnings"] = std::move(warnings);
    return j;
}

ojson sim_summary_json(const SimSummary& s) {
    ojson j;
    j["spec"] = {{"error_law", to_string(s.spec.error_law)},
                 {"K", s.spec.K},
                 {"n_i", s.spec.n_i},
                 {"beta_true", s.spec.beta_true},
                 {"sigma2_true", s.spec.sigma2_true},
                 {"reps", s.spec.reps},
                 {"sigma2_mode", sigma2_mode_name(s.spec.sigma2_mode)},
                 {"base_seed", s.spec.base_seed}};
    j["degenerate"] = s.degenerate;
    ojson failures;
    for (const MethodSummary& m : s.methods) failures[m.method] = m.failures;
    j["failures"] = std::move(failures);
    ojson rows = ojson::array();
    for (const MethodSummary& m : s.methods)
        for (const CellSummary& c : m.cells)
            rows.push_back({{"method", m.method},
                            {"error_law", to_string(s.spec.error_law)},
                            {"K", s.spec.K},
                            {"n_i", s.spec.n_i},
                            {"parameter", c.parameter},
                            {"mean", number_or_null(c.mean)},
                            {"sd", c.sd ? ojson(*c.sd) : ojson(nullptr)},
                            {"reps_used", c.reps_used}});
    j["rows"] = std::move(rows);
    return j;
}

std::string sim_summary_csv(const SimSummary& s) {
    std::ostringstream out;
    out << "method,error_law,K,n_i,parameter,mean,sd,reps_used\n";
    for (const MethodSummary& m : s.methods)
        for (const CellSummary& c : m.cells)
            out << m.method << ',' << to_string(s.spec.error_law) << ',' << s.spec.K << ','
                << s.spec.n_i << ',' << c.parameter << ',' << format_double(c.mean) << ','
                << (c.sd ? format_double(*c.sd) : "") << ',' << c.reps_used << '\n';
    return out.str();
}

std::string sim_summary_text(const SimSummary& s) {
    std::ostringstream out;
    out << "Results of parameter estimates over " << s.spec.reps << " replications (sigma2 "
        << sigma2_mode_name(s.spec.sigma2_mode) << ")\n";
    std::string header = pad("Error", 7) + pad("(K,n)", 9) + pad("method", 8);
    const std::size_t cells = s.methods.empty() ? 0 : s.methods.front().cells.size();
    for (std::size_t c = 0; c < cells; ++c) header += pad(s.methods.front().cells[c].parameter, 16);
    out << header << '\n';
    const std::string kn = "(" + std::to_string(s.spec.K) + "," + std::to_string(s.spec.n_i) + ")";
    bool first = true;
    for (const MethodSummary& m : s.methods) {
        std::string line = pad(first ? to_string(s.spec.error_law) : "", 7) + pad(first ? kn : "", 9) +
                           pad(m.method, 8);
        for (const CellSummary& c : m.cells)
            line += pad(fixed(c.mean, 3) + (c.sd ? "(" + fixed(*c.sd, 3) + ")" : "(--)"), 16);
        out << line << '\n';
        first = false;
    }
    for (const MethodSummary& m : s.methods)
        if (m.failures > 0)
            out << m.method << ": " << m.failures << " replication(s) failed and were excluded\n";
    if (s.degenerate) out << "note: fewer than two replications, standard deviations undefined\n";
    return out.str();
}

namespace {

const char* const kIndexNames[] = {"MPE", "MPPE", "MAPE", "MSPE"};

double index_value(const PredictionReport& r, int k) {
    switch (k) {
        case 0: return r.mpe;
        case 1: return r.mppe;
        case 2: return r.mape;
        default: return r.mspe;
    }
}

ojson method_json(const MethodPrediction& m) {
    return {{"method", m.method},
            {"beta_hat", m.beta_hat},
            {"sigma2_hat", m.sigma2_hat},
            {"converged", m.converged},
            {"MPE", m.report.mpe},
            {"MPPE", m.report.mppe},
            {"MAPE", m.report.mape},
            {"MSPE", m.report.mspe},
            {"n_test", m.report.n_test}};
}

}  // namespace

ojson benchmark_json(const MultiSplitResult& r) {
    ojson j;
    ojson splits = ojson::array();
    for (const BenchmarkResult& b : r.splits)
        splits.push_back({{"split_seed", b.split.seed},
                          {"replicate", b.split.replicate},
                          {"methods", ojson::array({method_json(b.hre), method_json(b.lse)})}});
    j["splits"] = std::move(splits);
    if (r.splits.size() > 1)
        j["hre_win_rate"] = {{"MPE", r.hre_win_rate.mpe},
                             {"MPPE", r.hre_win_rate.mppe},
                             {"MAPE", r.hre_win_rate.mape},
                             {"MSPE", r.hre_win_rate.mspe}};
    return j;
}

std::string benchmark_csv(const MultiSplitResult& r) {
    std::ostringstream out;
    out << "split_seed,replicate,method,index,value\n";
    for (const BenchmarkResult& b : r.splits)
        for (const MethodPrediction* m : {&b.hre, &b.lse})
            for (int k = 0; k < 4; ++k)
                out << b.split.seed << ',' << b.split.replicate << ',' << m->method << ','
                    << kIndexNames[k] << ',' << format_double(index_value(m->report, k)) << '\n';
    return out.str();
}

std::string benchmark_text(const MultiSplitResult& r) {
    std::ostringstream out;
    const std::size_t n = r.splits.size();
    out << "Median prediction errors"
        << (n > 1 ? ", averaged over " + std::to_string(n) + " splits" : std::string()) << '\n';
    out << pad("method", 8) << pad("beta", 22) << pad("sigma2", 10);
    for (const char* name : kIndexNames) out << pad(name, 12);
    out << '\n';
    for (int which = 0; which < 2; ++which) {
        double idx[4] = {0, 0, 0, 0};
        for (const BenchmarkResult& b : r.splits) {
            const MethodPrediction& m = which == 0 ? b.hre : b.lse;
            for (int k = 0; k < 4; ++k) idx[k] += index_value(m.report, k) / static_cast<double>(n);
        }
        const MethodPrediction& first = which == 0 ? r.splits.front().hre : r.splits.front().lse;
        std::string beta;
        for (std::size_t c = 0; c < first.beta_hat.size(); ++c)
            beta += (c ? "," : "") + fixed(first.beta_hat[c], 3);
        out << pad(first.method, 8) << pad(beta, 22) << pad(fixed(first.sigma2_hat, 3), 10);
        for (double v : idx) out << pad(fixed(v, 4), 12);
        out << '\n';
    }
    if (n > 1) {
        out << "HRE win rate (strictly smaller index than LSE):";
        for (int k = 0; k < 4; ++k) {
            const double w = k == 0   ? r.hre_win_rate.mpe
                             : k == 1 ? r.hre_win_rate.mppe
                             : k == 2 ? r.hre_win_rate.mape
                                      : r.hre_win_rate.mspe;
            out << ' ' << kIndexNames[k] << ' ' << fixed(w, 2);
        }
        out << '\n';
        out << "(estimates shown are from the first split's training fold)\n";
    }
    return out.str();
}

}  // namespace hre
