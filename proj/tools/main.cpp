#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polinf/cli_io.hpp"
#include "polinf/errors.hpp"
#include "polinf/parallel.hpp"
#include "polinf/rng.hpp"
#include "polinf/simulation.hpp"

namespace {

using namespace polinf;

struct CommonFlags {
    std::string config_path, data_path, out_path, grid, problem, loss, side = "two";
    std::uint64_t seed = 0;
    int threads = 0, sieve_k = 0, folds = 0, draws = 0;
    double alpha = -1.0;
    std::vector<std::string> benchmarks;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_data) {
    cmd->add_option("--config", f.config_path, "config file (key = value, [section] headers)");
    auto* data = cmd->add_option("--data", f.data_path, "input CSV (columns y[,a],x1..xd)");
    if (needs_data) data->required();
    cmd->add_option("--out", f.out_path, "output path (default: stdout)");
    cmd->add_option("--seed", f.seed, "RNG seed");
    cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
    cmd->add_option("--problem", f.problem, "max-score|utility|welfare");
    cmd->add_option("--loss", f.loss, "logistic|exponential|squared");
    cmd->add_option("--k", f.sieve_k, "sieve order per dimension");
    cmd->add_option("--folds", f.folds, "cross-fitting folds");
    cmd->add_option("--alpha", f.alpha, "significance level");
    cmd->add_option("--B", f.draws, "bootstrap draws");
    cmd->add_option("--grid", f.grid, "grid spec, e.g. x1=0.05:0.95:201,x2=0.5556");
    cmd->add_option("--benchmark", f.benchmarks, "benchmark policy (repeatable)");
}

RunConfig build_config(const CLI::App* cmd, const CommonFlags& f) {
    RunConfig cfg;
    if (!f.config_path.empty()) cfg.apply_config_file(f.config_path);
    if (cmd->count("--problem")) cfg.problem = problem_kind_from_string(f.problem);
    if (cmd->count("--loss")) cfg.loss = loss_kind_from_string(f.loss);
    if (cmd->count("--k")) cfg.sieve_k = f.sieve_k;
    if (cmd->count("--folds")) cfg.m = f.folds;
    if (cmd->count("--alpha")) cfg.alpha = f.alpha;
    if (cmd->count("--B")) cfg.bootstrap_draws = f.draws;
    if (cmd->count("--seed")) cfg.seed = f.seed;
    if (cmd->count("--threads")) cfg.threads = f.threads;
    if (cmd->count("--grid")) cfg.grid_spec = f.grid;
    if (cmd->count("--benchmark")) cfg.benchmarks = f.benchmarks;
    if (cmd->count("--data")) cfg.data_path = f.data_path;
    cfg.validate();
    return cfg;
}

void emit(const std::string& out_path, const nlohmann::json& j) {
    const std::string text = dump_report(j);
    if (out_path.empty()) std::cout << text;
    else write_text_file(out_path, text);
}

void write_csv(const std::string& path, const std::string& contents) {
    if (path.empty()) return;
    write_text_file(path, contents);
}

int run_fit_policy(const CLI::App* cmd, const CommonFlags& f) {
    const RunConfig cfg = build_config(cmd, f);
    const ObservationTable table = ingest_csv(cfg.data_path, cfg.problem);
    const PolicyPipeline run = fit_policy_pipeline(table, cfg.pipeline_config());
    nlohmann::json j = run.model.to_json();
    j["config"] = cfg.to_json();
    emit(f.out_path, j);
    return 0;
}

int run_ucb(const CLI::App* cmd, const CommonFlags& f) {
    const RunConfig cfg = build_config(cmd, f);
    const BandSide side = band_side_from_string(f.side);
    const ObservationTable table = ingest_csv(cfg.data_path, cfg.problem);
    const PolicyPipeline run = fit_policy_pipeline(table, cfg.pipeline_config());
    const EvalGrid grid = EvalGrid::parse(cfg.grid_spec, table.dim());
    const PolicyBand band = build_band(
        run.model, run.basis_rows, run.weights_fullsample.psi_plus,
        run.weights_fullsample.psi_minus, grid, cfg.alpha, cfg.bootstrap_draws,
        mix_seed(cfg.seed, {0xba0d5ULL, static_cast<std::uint64_t>(side)}), side);
    nlohmann::json j = band.to_json();
    j["config"] = cfg.to_json();
    emit(f.out_path, j);
    return 0;
}

int run_welfare(const CLI::App* cmd, const CommonFlags& f, bool benchmarks_required) {
    RunConfig cfg = build_config(cmd, f);
    if (benchmarks_required && cfg.benchmarks.empty())
        throw ConfigError("test-benchmark requires at least one --benchmark");
    const ObservationTable table = ingest_csv(cfg.data_path, cfg.problem);
    const PolicyPipeline run = fit_policy_pipeline(table, cfg.pipeline_config());
    const Eigen::VectorXd g_rows = run.g_hat_sample();
    ValueReport value =
        value_ci(g_rows, run.weights_crossfit.psi1, run.weights_crossfit.psi0, cfg.alpha,
                 cfg.bootstrap_draws, mix_seed(cfg.seed, {0x7a1ceALL}));
    for (size_t b = 0; b < cfg.benchmarks.size(); ++b) {
        const BenchmarkPolicy bench =
            BenchmarkPolicy::parse(cfg.benchmarks[b], mix_seed(cfg.seed, {0xbe9cULL, b}),
                                   table.n());
        value.benchmarks.push_back(benchmark_test(
            g_rows, bench.evaluate_rows(table.x), run.weights_crossfit.psi1,
            run.weights_crossfit.psi0, cfg.bootstrap_draws, mix_seed(cfg.seed, {0x7e57ULL, b}),
            bench.label()));
    }
    nlohmann::json j = value.to_json();
    if (table.norm.y_normalized) {
        const double range = table.norm.y_max - table.norm.y_min;
        j["raw_scale"] = {{"v_hat", table.norm.y_min + range * value.v_hat},
                          {"ci_lo", table.norm.y_min + range * value.ci_lo},
                          {"ci_hi", table.norm.y_min + range * value.ci_hi}};
    }
    j["config"] = cfg.to_json();
    emit(f.out_path, j);
    return 0;
}

int run_report(const CLI::App* cmd, const CommonFlags& f, const std::string& in_path,
               bool verify) {
    if (in_path.empty()) {
        // Fresh full-pipeline report from data + config.
        if (f.data_path.empty() && f.config_path.empty())
            throw ConfigError("report needs --in <report.json> or --data <csv>");
        const RunConfig cfg = build_config(cmd, f);
        emit(f.out_path, run_pipeline(cfg));
        return 0;
    }
    const std::string original = read_text_file(in_path);
    const nlohmann::json parsed = nlohmann::json::parse(original);
    if (!parsed.contains("schema") || parsed.at("schema") != "v1")
        throw ConfigError("--in expects a full pipeline report (schema v1)");
    const RunConfig cfg = RunConfig::from_json(parsed.at("config"));
    const nlohmann::json rebuilt = run_pipeline(cfg);
    const std::string text = dump_report(rebuilt);
    if (verify && text != original) {
        std::cerr << "report verification FAILED: rerun differs from " << in_path << "\n";
        return 4;
    }
    if (f.out_path.empty()) std::cout << text;
    else write_text_file(f.out_path, text);
    if (verify) std::cerr << "report verified: rerun is bit-identical\n";
    return 0;
}

struct SimulateFlags {
    std::string experiment = "size", scale = "desk", out_path, out_csv, loss = "logistic";
    int n = 0, S = 0, B = 0, k = 0, panel = 0, grid_points = 201, threads = 0;
    double alpha = 0.05;
    std::uint64_t seed = 0;
};

int run_simulate(const CLI::App* cmd, const SimulateFlags& f) {
    const ExperimentScale scale =
        f.scale == "paper" ? ExperimentScale::paper() : ExperimentScale::desk();
    if (f.scale != "desk" && f.scale != "paper")
        throw ConfigError("scale must be desk or paper");
    const int S = f.S > 0 ? f.S : scale.replications;
    const int B = f.B > 0 ? f.B : scale.bootstrap_draws;
    const int threads = resolve_threads(f.threads);

    nlohmann::json out;
    out["experiment"] = f.experiment;
    out["scale"] = f.scale;
    std::string csv;

    if (f.experiment == "size") {
        const std::vector<int> n_list = f.n > 0 ? std::vector<int>{f.n} : std::vector<int>{250};
        const std::vector<int> k_list = f.k > 0 ? std::vector<int>{f.k} : std::vector<int>{2, 3};
        const std::vector<LossKind> losses =
            cmd->count("--loss") ? std::vector<LossKind>{loss_kind_from_string(f.loss)}
                                 : std::vector<LossKind>{LossKind::logistic,
                                                         LossKind::exponential,
                                                         LossKind::squared};
        const std::vector<int> panels = f.panel > 0 ? std::vector<int>{f.panel}
                                                    : std::vector<int>{1, 2};
        nlohmann::json cells = nlohmann::json::array();
        csv = "panel,n,loss,k,nonrejection\n";
        for (int panel : panels)
            for (int n : n_list)
                for (LossKind loss : losses)
                    for (int k : k_list) {
                        SizeConfig cfg;
                        cfg.n = n;
                        cfg.loss = loss;
                        cfg.sieve_k = k;
                        cfg.panel = panel;
                        cfg.replications = S;
                        cfg.bootstrap_draws = B;
                        cfg.alpha = f.alpha;
                        cfg.grid_points = f.grid_points;
                        cfg.seed = f.seed;
                        cfg.threads = threads;
                        const SizeCell cell = run_size_experiment(cfg);
                        cells.push_back({{"panel", panel},
                                         {"n", n},
                                         {"loss", to_string(loss)},
                                         {"k", k},
                                         {"S", S},
                                         {"B", B},
                                         {"nonrejection", cell.nonrejection_rate}});
                        csv += std::to_string(panel) + "," + std::to_string(n) + "," +
                               to_string(loss) + "," + std::to_string(k) + "," +
                               std::to_string(cell.nonrejection_rate) + "\n";
                        std::cerr << "size panel " << panel << " n=" << n << " "
                                  << to_string(loss) << " k=" << k
                                  << " nonrejection=" << cell.nonrejection_rate << "\n";
                    }
        out["cells"] = cells;
    } else if (f.experiment == "rejection") {
        RejectionConfig cfg;
        if (f.n > 0) cfg.n = f.n;
        if (f.k > 0) cfg.sieve_k = f.k;
        if (cmd->count("--loss")) cfg.loss = loss_kind_from_string(f.loss);
        cfg.replications = S;
        cfg.bootstrap_draws = B;
        cfg.alpha = f.alpha;
        cfg.seed = f.seed;
        cfg.threads = threads;
        const auto rows = run_rejection_experiment(cfg);
        nlohmann::json jr = nlohmann::json::array();
        csv = "benchmark,two_sided,left_sided,right_sided\n";
        for (const auto& r : rows) {
            jr.push_back({{"benchmark", r.benchmark},
                          {"two_sided", r.reject_two_sided},
                          {"left_sided", r.reject_left},
                          {"right_sided", r.reject_right}});
            csv += r.benchmark + "," + std::to_string(r.reject_two_sided) + "," +
                   std::to_string(r.reject_left) + "," + std::to_string(r.reject_right) + "\n";
        }
        out["rows"] = jr;
        out["n"] = cfg.n;
        out["S"] = S;
        out["B"] = B;
    } else if (f.experiment == "normality") {
        NormalityConfig cfg;
        if (f.n > 0) cfg.n = f.n;
        if (f.k > 0) cfg.sieve_k = f.k;
        if (cmd->count("--loss")) cfg.loss = loss_kind_from_string(f.loss);
        cfg.replications = std::max(S, 200);
        cfg.seed = f.seed;
        cfg.threads = threads;
        const NormalityResult result = run_normality_diagnostic(cfg);
        nlohmann::json jr = nlohmann::json::array();
        csv = "rule,rep,standardized\n";
        for (const auto& rule : result.rules) {
            jr.push_back({{"rule", rule.name},
                          {"mean", rule.mean},
                          {"std", rule.stddev},
                          {"ks_stat", rule.ks_stat},
                          {"ks_pvalue", rule.ks_pvalue}});
            for (size_t i = 0; i < rule.standardized.size(); ++i)
                csv += rule.name + "," + std::to_string(i) + "," +
                       std::to_string(rule.standardized[i]) + "\n";
        }
        out["rules"] = jr;
        out["ks_est_vs_oracle"] = result.ks_est_vs_oracle;
        out["n"] = cfg.n;
        out["S"] = cfg.replications;
    } else {
        throw ConfigError("unknown experiment: '" + f.experiment +
                          "' (expected size|rejection|normality)");
    }

    emit(f.out_path, out);
    write_csv(f.out_csv, csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surrogate-loss policy classification: sieve estimation, uniform "
                 "confidence bands, and policy-value inference"};
    app.require_subcommand(1);

    CommonFlags fit_f, ucb_f, welfare_f, bench_f;
    auto* fit = app.add_subcommand("fit-policy", "fit the sieve policy and sandwich matrices");
    add_common(fit, fit_f, true);
    auto* ucb = app.add_subcommand("ucb", "uniform confidence band for the policy function");
    add_common(ucb, ucb_f, true);
    ucb->add_option("--side", ucb_f.side, "two|lower|upper");
    auto* welfare = app.add_subcommand("welfare", "policy value estimate and bootstrap CI");
    add_common(welfare, welfare_f, true);
    auto* bench = app.add_subcommand("test-benchmark", "welfare tests against benchmark policies");
    add_common(bench, bench_f, true);

    SimulateFlags sim_f;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo experiments on the built-in design");
    sim->add_option("--experiment", sim_f.experiment, "size|rejection|normality")->required();
    sim->add_option("--scale", sim_f.scale, "desk|paper");
    sim->add_option("--n", sim_f.n, "sample size");
    sim->add_option("--S", sim_f.S, "replications");
    sim->add_option("--B", sim_f.B, "bootstrap draws");
    sim->add_option("--k", sim_f.k, "sieve order");
    sim->add_option("--loss", sim_f.loss, "loss kind");
    sim->add_option("--panel", sim_f.panel, "1 or 2 (size experiment)");
    sim->add_option("--alpha", sim_f.alpha, "significance level");
    sim->add_option("--grid-points", sim_f.grid_points, "grid resolution");
    sim->add_option("--seed", sim_f.seed, "RNG seed");
    sim->add_option("--threads", sim_f.threads, "worker threads (0 = all cores)");
    sim->add_option("--out", sim_f.out_path, "JSON output path");
    sim->add_option("--out-csv", sim_f.out_csv, "CSV table output path");

    CommonFlags report_f;
    std::string report_in;
    bool report_verify = false;
    auto* report = app.add_subcommand(
        "report", "full pipeline report, or re-run one from its embedded config");
    add_common(report, report_f, false);
    report->add_option("--in", report_in, "existing report JSON to re-run");
    report->add_flag("--verify", report_verify, "check the rerun is bit-identical");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) return run_fit_policy(fit, fit_f);
        if (ucb->parsed()) return run_ucb(ucb, ucb_f);
        if (welfare->parsed()) return run_welfare(welfare, welfare_f, false);
        if (bench->parsed()) return run_welfare(bench, bench_f, true);
        if (sim->parsed()) return run_simulate(sim, sim_f);
        if (report->parsed()) return run_report(report, report_f, report_in, report_verify);
    } catch (const polinf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const polinf::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const polinf::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
