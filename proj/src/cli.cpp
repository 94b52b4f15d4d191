#include "hre/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "hre/csv_io.hpp"
#include "hre/errors.hpp"
#include "hre/estimator.hpp"
#include "hre/fixtures.hpp"
#include "hre/lse.hpp"
#include "hre/prediction.hpp"
#include "hre/report.hpp"
#include "hre/simulation.hpp"

namespace hre {

namespace {

using ojson = nlohmann::ordered_json;

struct DataFlags {
    std::string path;
    std::string group = "group";
    std::string response = "y";
    std::vector<std::string> covariates;
    bool no_header = false;
};

struct FitFlags {
    DataFlags data;
    std::string method = "both";
    std::string sigma2 = "estimate";
    double tol = 1e-8;
    int max_iters = 100;
    double phi = kLseDefaultPhi;
    bool oracle = false;
    std::string out = "hre_fit";
};

struct SimulateFlags {
    std::string error = "E1";
    int K = 10;
    int ni = 10;
    int reps = 500;
    std::string sigma2 = "known:1";
    std::uint64_t seed = 42;
    std::vector<double> beta{2.0, 2.0, 1.0, 1.0};
    int threads = 1;
    std::string out = "hre_sim";
};

struct BenchmarkFlags {
    DataFlags data;
    double train_frac = 2.0 / 3.0;
    int splits = 1;
    std::uint64_t seed = 1;
    bool pooled = false;
    std::string sigma2 = "estimate";
    double tol = 1e-8;
    int max_iters = 100;
    double phi = kLseDefaultPhi;
    int threads = 1;
    std::string out = "hre_bench";
};

struct GenerateFlags {
    std::string shape;
    std::string error = "E1";
    int K = 10;
    int ni = 10;
    int rep = 0;
    std::uint64_t seed = 42;
    double sigma2_true = 1.0;
    std::vector<double> beta{2.0, 2.0, 1.0, 1.0};
    std::string out;
};

struct Sigma2Choice {
    Sigma2Mode mode = Sigma2Mode::Estimate;
    double value = 1.0;
};

Sigma2Choice parse_sigma2(const std::string& text) {
    if (text == "estimate") return {Sigma2Mode::Estimate, 1.0};
    const std::string prefix = "known:";
    if (text.rfind(prefix, 0) == 0) {
        const std::string v = text.substr(prefix.size());
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == v.size() && used > 0 && value > 0.0) return {Sigma2Mode::Known, value};
    }
    throw DomainError("--sigma2 must be 'estimate' or 'known:<positive value>', got '" + text + "'");
}

void add_data_options(CLI::App* cmd, DataFlags& f) {
    cmd->add_option("--data", f.path, "panel CSV file")->required();
    cmd->add_option("--group", f.group, "group label column")->capture_default_str();
    cmd->add_option("--response", f.response, "positive response column")->capture_default_str();
    cmd->add_option("--covariates", f.covariates, "covariate columns, comma separated")
        ->delimiter(',');
    cmd->add_flag("--no-header", f.no_header, "file has no header; columns are 1-based positions");
}

ojson data_flags_json(const DataFlags& f) {
    return {{"data", f.path},
            {"group", f.group},
            {"response", f.response},
            {"covariates", f.covariates},
            {"no_header", f.no_header}};
}

PanelDataset load_data(const DataFlags& f) {
    CsvPanelFormat fmt;
    fmt.group_column = f.group;
    fmt.response_column = f.response;
    fmt.covariate_columns = f.covariates;
    fmt.has_header = !f.no_header;
    return read_panel_csv(f.path, fmt);
}

std::string comment_header(const ojson& meta) {
    return "# " + meta.dump() + "\n";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw DomainError("cannot open '" + path + "' for writing");
    file << content;
    if (!file) throw DomainError("failed writing '" + path + "'");
}

// JSON, CSV and text are always written together. CSV and text carry the
// meta block as a leading comment line.
void write_outputs(const std::string& prefix, const ojson& meta, ojson body, const std::string& csv,
                   const std::string& text) {
    ojson doc;
    doc["meta"] = meta;
    for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
    write_file(prefix + ".json", doc.dump(2) + "\n");
    write_file(prefix + ".csv", comment_header(meta) + csv);
    write_file(prefix + ".txt", comment_header(meta) + text);
}

FitConfig hre_config(const Sigma2Choice& s2, double tol, int max_iters) {
    if (!(tol > 0.0)) throw DomainError("--tol must be positive");
    if (max_iters < 1) throw DomainError("--max-iters must be >= 1");
    FitConfig c;
    c.sigma2_mode = s2.mode;
    c.sigma2_known = s2.value;
    c.tol_param = tol;
    c.tol_grad = tol;
    c.max_outer_iters = max_iters;
    return c;
}

LseConfig lse_config(const Sigma2Choice& s2, double phi) {
    LseConfig c;
    c.sigma2_mode = s2.mode;
    c.sigma2_known = s2.value;
    c.phi = phi;
    return c;
}

std::string coefficient_text(const std::string& method, const std::vector<std::string>& names,
                             const std::vector<double>& beta, const std::vector<double>& se,
                             double sigma2, Sigma2Mode mode) {
    std::ostringstream out;
    char buf[160];
    out << method << '\n';
    std::snprintf(buf, sizeof buf, "  %-16s %14s %12s\n", "parameter", "estimate", "std.error");
    out << buf;
    for (std::size_t c = 0; c < beta.size(); ++c) {
        std::snprintf(buf, sizeof buf, "  %-16s %14.6f %12.6f\n", names[c].c_str(), beta[c],
                      c < se.size() ? se[c] : 0.0);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "  %-16s %14.6f %12s\n", "sigma2", sigma2,
                  mode == Sigma2Mode::Known ? "(known)" : "");
    out << buf;
    return out.str();
}

int cmd_fit(const FitFlags& f, std::ostream& out, std::ostream& err) {
    const Sigma2Choice s2 = parse_sigma2(f.sigma2);
    const PanelDataset data = load_data(f.data);
    const std::string digest = dataset_digest(data);
    const std::vector<std::string> names = coefficient_names(f.data.covariates);

    ojson flags = data_flags_json(f.data);
    flags["method"] = f.method;
    flags["sigma2"] = f.sigma2;
    flags["tol"] = f.tol;
    flags["max_iters"] = f.max_iters;
    flags["phi"] = f.phi;
    flags["oracle"] = f.oracle;
    flags["out"] = f.out;
    const ojson meta = make_meta("fit", flags, digest);

    ojson results = ojson::array();
    std::ostringstream csv, text;
    csv << "method,parameter,estimate,se\n";
    bool not_converged = false;

    if (f.method == "hre" || f.method == "both") {
        const FitResult r = fit(data, hre_config(s2, f.tol, f.max_iters));
        std::optional<OracleReport> oracle;
        if (f.oracle) oracle = oracle_report(data, r);
        ojson block = hre_fit_json(r, data, names, s2.mode, oracle);
        block["dataset_digest"] = digest;
        results.push_back(std::move(block));
        for (std::size_t c = 0; c < r.beta_hat.size(); ++c)
            csv << "HRE," << names[c] << ',' << format_double(r.beta_hat[c]) << ','
                << format_double(r.se_beta[c]) << '\n';
        csv << "HRE,sigma2," << format_double(r.sigma2_hat) << ",\n";
        text << coefficient_text("HRE", names, r.beta_hat, r.se_beta, r.sigma2_hat, s2.mode);
        text << "  converged: " << (r.converged ? "yes" : "no") << " after " << r.iterations
             << " iterations\n";
        if (oracle) {
            text << "  marginal loglik (quadrature) " << format_double(oracle->marginal_quadrature)
                 << "\n  Laplace gap first order " << format_double(oracle->gap_first) << '\n';
            if (oracle->gap_second)
                text << "  Laplace gap second order " << format_double(*oracle->gap_second) << '\n';
        }
        for (const std::string& w : r.warnings) err << "warning: " << w << '\n';
        if (!r.converged) not_converged = true;
    }
    if (f.method == "lse" || f.method == "both") {
        const LseFit r = lse_fit(data, lse_config(s2, f.phi));
        ojson block = lse_fit_json(r, names, s2.mode);
        block["dataset_digest"] = digest;
        results.push_back(std::move(block));
        for (std::size_t c = 0; c < r.beta_hat.size(); ++c)
            csv << "LSE," << names[c] << ',' << format_double(r.beta_hat[c]) << ','
                << format_double(r.se_beta[c]) << '\n';
        csv << "LSE,sigma2," << format_double(r.sigma2_hat) << ",\n";
        text << coefficient_text("LSE", names, r.beta_hat, r.se_beta, r.sigma2_hat, s2.mode);
    }

    write_outputs(f.out, meta, ojson{{"results", results}}, csv.str(), text.str());
    out << text.str();
    if (not_converged) {
        err << "error: HRE fit did not converge (results written with converged = false)\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

int cmd_simulate(const SimulateFlags& f, std::ostream& out, std::ostream& err) {
    const Sigma2Choice s2 = parse_sigma2(f.sigma2);
    if (f.K < 1 || f.ni < 1 || f.reps < 1) throw DomainError("--K, --ni and --reps must be >= 1");
    if (f.threads < 1) throw DomainError("--threads must be >= 1");
    if (f.beta.empty()) throw DomainError("--beta must have at least one value");
    SimSpec spec;
    spec.error_law = parse_error_law(f.error);
    spec.K = f.K;
    spec.n_i = f.ni;
    spec.reps = f.reps;
    spec.sigma2_mode = s2.mode;
    spec.sigma2_true = s2.mode == Sigma2Mode::Known ? s2.value : 1.0;
    spec.base_seed = f.seed;
    spec.beta_true = f.beta;

    const SimSummary summary = run_study(spec, f.threads);

    // --threads is left out: it cannot change the content.
    const ojson flags = {{"error", f.error}, {"K", f.K},         {"ni", f.ni},
                         {"reps", f.reps},   {"sigma2", f.sigma2}, {"seed", f.seed},
                         {"beta", f.beta},   {"out", f.out}};
    const ojson meta = make_meta("simulate", flags, std::nullopt);
    const std::string text = sim_summary_text(summary);
    write_outputs(f.out, meta, ojson{{"summary", sim_summary_json(summary)}},
                  sim_summary_csv(summary), text);
    out << text;
    err << "simulate: " << summary.spec.reps << " replications in " << summary.wall_time_seconds
        << " s\n";
    return kExitOk;
}

int cmd_benchmark(const BenchmarkFlags& f, std::ostream& out, std::ostream& err) {
    const Sigma2Choice s2 = parse_sigma2(f.sigma2);
    if (f.splits < 1) throw DomainError("--splits must be >= 1");
    if (f.threads < 1) throw DomainError("--threads must be >= 1");
    const PanelDataset data = load_data(f.data);
    const std::string digest = dataset_digest(data);

    SplitSpec split_spec;
    split_spec.train_fraction = f.train_frac;
    split_spec.stratify_by_group = !f.pooled;
    split_spec.seed = f.seed;
    const MultiSplitResult result = benchmark_splits(
        data, split_spec, f.splits, hre_config(s2, f.tol, f.max_iters), lse_config(s2, f.phi),
        f.threads);

    ojson flags = data_flags_json(f.data);
    flags["train_frac"] = f.train_frac;
    flags["splits"] = f.splits;
    flags["seed"] = f.seed;
    flags["pooled"] = f.pooled;
    flags["sigma2"] = f.sigma2;
    flags["tol"] = f.tol;
    flags["max_iters"] = f.max_iters;
    flags["phi"] = f.phi;
    flags["out"] = f.out;
    const ojson meta = make_meta("benchmark", flags, digest);
    const std::string text = benchmark_text(result);
    write_outputs(f.out, meta, benchmark_json(result), benchmark_csv(result), text);
    out << text;

    int failed = 0;
    for (const BenchmarkResult& b : result.splits) failed += !b.hre.converged;
    if (failed > 0) {
        err << "error: HRE did not converge on " << failed << " split(s)\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

int cmd_generate(const GenerateFlags& f, std::ostream& out) {
    PanelDataset data = [&] {
        if (!f.shape.empty()) return generate_shaped(shape_by_name(f.shape));
        SimSpec spec;
        spec.error_law = parse_error_law(f.error);
        spec.K = f.K;
        spec.n_i = f.ni;
        spec.beta_true = f.beta;
        if (!(f.sigma2_true > 0.0)) throw DomainError("--sigma2-true must be positive");
        spec.sigma2_true = f.sigma2_true;
        spec.base_seed = f.seed;
        if (f.rep < 0) throw DomainError("--rep must be >= 0");
        spec.reps = f.rep + 1;
        return generate(spec, f.rep);
    }();
    std::vector<std::string> names;
    if (!f.shape.empty()) {
        names.push_back(shape_by_name(f.shape).covariate_name);
    } else {
        for (std::size_t c = 1; c < data.num_covariates(); ++c) names.push_back("x" + std::to_string(c));
    }
    std::ostringstream csv;
    write_panel_csv(csv, data, names);
    write_file(f.out, csv.str());
    out << "wrote " << data.num_observations() << " rows in " << data.num_groups() << " groups to "
        << f.out << " (digest " << dataset_digest(data) << ")\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hierarchical-likelihood relative error regression for positive panel data"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    FitFlags fit_flags;
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit HRE and/or LSE to a panel CSV");
    add_data_options(fit_cmd, fit_flags.data);
    fit_cmd->add_option("--method", fit_flags.method, "hre, lse or both")
        ->check(CLI::IsMember({"hre", "lse", "both"}))
        ->capture_default_str();
    fit_cmd->add_option("--sigma2", fit_flags.sigma2, "known:<v> or estimate")->capture_default_str();
    fit_cmd->add_option("--tol", fit_flags.tol, "convergence tolerance")->capture_default_str();
    fit_cmd->add_option("--max-iters", fit_flags.max_iters, "outer iteration cap")->capture_default_str();
    fit_cmd->add_option("--phi", fit_flags.phi, "LSE residual SD on the log scale")->capture_default_str();
    fit_cmd->add_flag("--oracle", fit_flags.oracle, "also report the quadrature marginal likelihood");
    fit_cmd->add_option("--out", fit_flags.out, "output path prefix")->capture_default_str();

    SimulateFlags sim_flags;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo study under E1/E2/E3");
    sim_cmd->add_option("--error", sim_flags.error, "E1, E2 or E3")
        ->check(CLI::IsMember({"E1", "E2", "E3", "e1", "e2", "e3"}))
        ->capture_default_str();
    sim_cmd->add_option("--K", sim_flags.K, "number of groups")->capture_default_str();
    sim_cmd->add_option("--ni", sim_flags.ni, "observations per group")->capture_default_str();
    sim_cmd->add_option("--reps", sim_flags.reps, "replications")->capture_default_str();
    sim_cmd->add_option("--sigma2", sim_flags.sigma2, "known:<v> or estimate")->capture_default_str();
    sim_cmd->add_option("--seed", sim_flags.seed, "base seed")->capture_default_str();
    sim_cmd->add_option("--beta", sim_flags.beta, "true coefficients, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    sim_cmd->add_option("--threads", sim_flags.threads, "worker threads")->capture_default_str();
    sim_cmd->add_option("--out", sim_flags.out, "output path prefix")->capture_default_str();

    BenchmarkFlags bench_flags;
    CLI::App* bench_cmd = app.add_subcommand("benchmark", "held-out prediction comparison");
    add_data_options(bench_cmd, bench_flags.data);
    bench_cmd->add_option("--train-frac", bench_flags.train_frac, "training fraction per group")
        ->capture_default_str();
    bench_cmd->add_option("--splits", bench_flags.splits, "number of random splits")->capture_default_str();
    bench_cmd->add_option("--seed", bench_flags.seed, "split seed")->capture_default_str();
    bench_cmd->add_flag("--pooled", bench_flags.pooled, "split the pooled sample instead of per group");
    bench_cmd->add_option("--sigma2", bench_flags.sigma2, "known:<v> or estimate")->capture_default_str();
    bench_cmd->add_option("--tol", bench_flags.tol, "HRE convergence tolerance")->capture_default_str();
    bench_cmd->add_option("--max-iters", bench_flags.max_iters, "HRE iteration cap")->capture_default_str();
    bench_cmd->add_option("--phi", bench_flags.phi, "LSE residual SD on the log scale")->capture_default_str();
    bench_cmd->add_option("--threads", bench_flags.threads, "worker threads")->capture_default_str();
    bench_cmd->add_option("--out", bench_flags.out, "output path prefix")->capture_default_str();

    GenerateFlags gen_flags;
    CLI::App* gen_cmd = app.add_subcommand("generate", "write a synthetic panel CSV");
    gen_cmd->add_option("--shape", gen_flags.shape, "cakes or sleepstudy fixture")
        ->check(CLI::IsMember({"cakes", "sleepstudy"}));
    gen_cmd->add_option("--error", gen_flags.error, "E1, E2 or E3")
        ->check(CLI::IsMember({"E1", "E2", "E3", "e1", "e2", "e3"}))
        ->capture_default_str();
    gen_cmd->add_option("--K", gen_flags.K, "number of groups")->capture_default_str();
    gen_cmd->add_option("--ni", gen_flags.ni, "observations per group")->capture_default_str();
    gen_cmd->add_option("--rep", gen_flags.rep, "replication index")->capture_default_str();
    gen_cmd->add_option("--seed", gen_flags.seed, "base seed")->capture_default_str();
    gen_cmd->add_option("--sigma2-true", gen_flags.sigma2_true, "random-effect variance")
        ->capture_default_str();
    gen_cmd->add_option("--beta", gen_flags.beta, "true coefficients, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    gen_cmd->add_option("--out", gen_flags.out, "CSV file to write")->required();

    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitBadInput;
    }

    try {
        if (fit_cmd->parsed()) return cmd_fit(fit_flags, out, err);
        if (sim_cmd->parsed()) return cmd_simulate(sim_flags, out, err);
        if (bench_cmd->parsed()) return cmd_benchmark(bench_flags, out, err);
        if (gen_cmd->parsed()) return cmd_generate(gen_flags, out);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const GroupTooSmall& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const DegenerateDesign& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const DimensionMismatch& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const Error& e) {
        // Numerical breakdown of the fit itself.
        err << "error: " << e.what() << '\n';
        return kExitNotConverged;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitInternal;
}

}  // namespace hre
