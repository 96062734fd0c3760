#include "polinf/cli_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "polinf/errors.hpp"
#include "polinf/rng.hpp"

namespace polinf {

void RunConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    if (bootstrap_draws < 100) throw ConfigError("B must be >= 100");
    if (sieve_k < 1) throw ConfigError("sieve.k must be >= 1");
    if (m < 2) throw ConfigError("folds must be >= 2");
    if (nuisance.k < 1) throw ConfigError("nuisance.k must be >= 1");
    if (nuisance.cv_folds < 2) throw ConfigError("nuisance.cv_folds must be >= 2");
    if (nuisance.grid_size < 1) throw ConfigError("nuisance.grid_size must be >= 1");
    if (problem == ProblemKind::utility && !(utility_c > 0.0 && utility_c < 1.0))
        throw ConfigError("utility.c must lie in (0,1)");
    if (problem == ProblemKind::utility && utility_b < 0.0)
        throw ConfigError("utility.b must be nonnegative");
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json benches = nlohmann::json::array();
    for (const auto& b : benchmarks) benches.push_back(b);
    return nlohmann::json{{"problem", to_string(problem)},
                          {"loss", to_string(loss)},
                          {"sieve", {{"k", sieve_k}}},
                          {"folds", m},
                          {"nuisance",
                           {{"k", nuisance.k},
                            {"cv_folds", nuisance.cv_folds},
                            {"grid_size", nuisance.grid_size}}},
                          {"alpha", alpha},
                          {"B", bootstrap_draws},
                          {"seed", seed},
                          {"threads", threads},
                          {"grid", grid_spec},
                          {"utility", {{"b", utility_b}, {"c", utility_c}}},
                          {"benchmarks", benches},
                          {"data", data_path}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    c.problem = problem_kind_from_string(j.at("problem").get<std::string>());
    c.loss = loss_kind_from_string(j.at("loss").get<std::string>());
    c.sieve_k = j.at("sieve").at("k").get<int>();
    c.m = j.at("folds").get<int>();
    c.nuisance.k = j.at("nuisance").at("k").get<int>();
    c.nuisance.cv_folds = j.at("nuisance").at("cv_folds").get<int>();
    c.nuisance.grid_size = j.at("nuisance").at("grid_size").get<int>();
    c.alpha = j.at("alpha").get<double>();
    c.bootstrap_draws = j.at("B").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.threads = j.at("threads").get<int>();
    c.grid_spec = j.at("grid").get<std::string>();
    c.utility_b = j.at("utility").at("b").get<double>();
    c.utility_c = j.at("utility").at("c").get<double>();
    for (const auto& b : j.at("benchmarks")) c.benchmarks.push_back(b.get<std::string>());
    c.data_path = j.at("data").get<std::string>();
    return c;
}

namespace {

std::string trim(const std::string& s) {
    const auto from = s.find_first_not_of(" \t\r\n");
    if (from == std::string::npos) return "";
    const auto to = s.find_last_not_of(" \t\r\n");
    return s.substr(from, to - from + 1);
}

long parse_long(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad integer for '" + key + "': '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad number for '" + key + "': '" + value + "'");
    }
}

}  // namespace

void RunConfig::apply_key(const std::string& key, const std::string& value) {
    if (key == "problem") problem = problem_kind_from_string(value);
    else if (key == "loss") loss = loss_kind_from_string(value);
    else if (key == "sieve.k") sieve_k = static_cast<int>(parse_long(key, value));
    else if (key == "folds") m = static_cast<int>(parse_long(key, value));
    else if (key == "nuisance.k") nuisance.k = static_cast<int>(parse_long(key, value));
    else if (key == "nuisance.cv_folds")
        nuisance.cv_folds = static_cast<int>(parse_long(key, value));
    else if (key == "nuisance.grid_size")
        nuisance.grid_size = static_cast<int>(parse_long(key, value));
    else if (key == "alpha") alpha = parse_double(key, value);
    else if (key == "B") bootstrap_draws = static_cast<int>(parse_long(key, value));
    else if (key == "seed") seed = static_cast<std::uint64_t>(parse_long(key, value));
    else if (key == "threads") threads = static_cast<int>(parse_long(key, value));
    else if (key == "grid") grid_spec = value;
    else if (key == "utility.b") utility_b = parse_double(key, value);
    else if (key == "utility.c") utility_c = parse_double(key, value);
    else if (key == "benchmarks") {
        benchmarks.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) benchmarks.push_back(item);
        }
    } else if (key == "data") data_path = value;
    else throw ConfigError("unknown config key: '" + key + "'");
}

void RunConfig::apply_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": missing '='");
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        apply_key(key, value);
    }
}

PipelineConfig RunConfig::pipeline_config() const {
    PipelineConfig p;
    p.problem = problem;
    p.loss = loss;
    p.sieve_k = sieve_k;
    p.m = m;
    p.nuisance = nuisance;
    p.seed = seed;
    p.utility_b = utility_b;
    p.utility_c = utility_c;
    return p;
}

ObservationTable ingest_csv(const std::string& path, ProblemKind problem) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file: " + path);

    std::string header;
    if (!std::getline(in, header)) throw DataError("empty data file: " + path);

    std::vector<std::string> columns;
    {
        std::stringstream ss(header);
        std::string cell;
        while (std::getline(ss, cell, ',')) columns.push_back(trim(cell));
    }
    int y_col = -1, a_col = -1;
    std::vector<int> x_cols;
    for (size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] == "y") y_col = static_cast<int>(c);
        else if (columns[c] == "a") a_col = static_cast<int>(c);
        else if (columns[c].size() >= 2 && columns[c][0] == 'x') x_cols.push_back(static_cast<int>(c));
        else throw DataError("unexpected column '" + columns[c] + "' (expected y, a, x1..xd)");
    }
    if (y_col < 0) throw DataError("missing required column 'y'");
    if (x_cols.empty()) throw DataError("missing covariate columns x1..xd");
    if (problem_requires_treatment(problem) && a_col < 0)
        throw DataError("problem '" + to_string(problem) + "' requires a treatment column 'a'");

    std::vector<double> ys, as;
    std::vector<std::vector<double>> xs;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        if (cells.size() != columns.size())
            throw DataError("row " + std::to_string(lineno) + ": expected " +
                            std::to_string(columns.size()) + " cells, got " +
                            std::to_string(cells.size()));
        auto cell_value = [&](int c) {
            try {
                size_t pos = 0;
                const double v = std::stod(cells[c], &pos);
                if (pos != cells[c].size()) throw std::invalid_argument(cells[c]);
                return v;
            } catch (const std::exception&) {
                throw DataError("row " + std::to_string(lineno) + ", column '" + columns[c] +
                                "': non-numeric cell '" + cells[c] + "'");
            }
        };
        ys.push_back(cell_value(y_col));
        if (a_col >= 0) as.push_back(cell_value(a_col));
        std::vector<double> row(x_cols.size());
        for (size_t j = 0; j < x_cols.size(); ++j) row[j] = cell_value(x_cols[j]);
        xs.push_back(std::move(row));
    }
    const int n = static_cast<int>(ys.size());
    if (n < 2) throw DataError("need at least 2 data rows");

    ObservationTable table;
    table.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
    table.x.resize(n, static_cast<int>(x_cols.size()));
    for (int i = 0; i < n; ++i)
        for (size_t j = 0; j < x_cols.size(); ++j) table.x(i, j) = xs[i][j];

    if (a_col >= 0) {
        Eigen::VectorXd a = Eigen::Map<Eigen::VectorXd>(as.data(), n);
        bool zero_one = true, pm_one = true;
        for (int i = 0; i < n; ++i) {
            if (a[i] != 0.0 && a[i] != 1.0) zero_one = false;
            if (a[i] != -1.0 && a[i] != 1.0) pm_one = false;
        }
        if (zero_one) {
            table.a = a;
        } else if (pm_one) {
            table.a = ((a.array() + 1.0) / 2.0).matrix();
        } else {
            throw DataError("treatment column must be coded {0,1} or {-1,1}");
        }
    }

    // Min-max normalization of covariates; outcome too for welfare problems.
    const int d = table.dim();
    table.norm.x_min.resize(d);
    table.norm.x_max.resize(d);
    for (int j = 0; j < d; ++j) {
        const double lo = table.x.col(j).minCoeff();
        const double hi = table.x.col(j).maxCoeff();
        if (!(hi > lo))
            throw DataError("covariate column x" + std::to_string(j + 1) +
                            " is constant: zero range");
        table.norm.x_min[j] = lo;
        table.norm.x_max[j] = hi;
        table.x.col(j) = (table.x.col(j).array() - lo) / (hi - lo);
    }
    if (problem == ProblemKind::welfare) {
        const double lo = table.y.minCoeff();
        const double hi = table.y.maxCoeff();
        if (!(hi > lo)) throw DataError("outcome column is constant: zero range");
        table.norm.y_normalized = true;
        table.norm.y_min = lo;
        table.norm.y_max = hi;
        table.y = (table.y.array() - lo) / (hi - lo);
    }
    table.validate(problem);
    return table;
}

namespace {

nlohmann::json normalization_json(const ObservationTable& table) {
    nlohmann::json xmin = nlohmann::json::array(), xmax = nlohmann::json::array();
    for (Eigen::Index j = 0; j < table.norm.x_min.size(); ++j) {
        xmin.push_back(table.norm.x_min[j]);
        xmax.push_back(table.norm.x_max[j]);
    }
    return nlohmann::json{{"x_min", xmin},
                          {"x_max", xmax},
                          {"y_normalized", table.norm.y_normalized},
                          {"y_min", table.norm.y_min},
                          {"y_max", table.norm.y_max}};
}

}  // namespace

nlohmann::json run_pipeline(const RunConfig& config) {
    config.validate();
    const ObservationTable table = ingest_csv(config.data_path, config.problem);
    const PolicyPipeline run = fit_policy_pipeline(table, config.pipeline_config());

    const EvalGrid grid = EvalGrid::parse(config.grid_spec, table.dim());

    nlohmann::json bands = nlohmann::json::array();
    for (const BandSide side : {BandSide::two_sided, BandSide::lower, BandSide::upper}) {
        const PolicyBand band =
            build_band(run.model, run.basis_rows, run.weights_fullsample.psi_plus,
                       run.weights_fullsample.psi_minus, grid, config.alpha,
                       config.bootstrap_draws,
                       mix_seed(config.seed, {0xba0d5ULL, static_cast<std::uint64_t>(side)}),
                       side);
        bands.push_back(band.to_json());
    }

    const Eigen::VectorXd g_rows = run.g_hat_sample();
    ValueReport value =
        value_ci(g_rows, run.weights_crossfit.psi1, run.weights_crossfit.psi0, config.alpha,
                 config.bootstrap_draws, mix_seed(config.seed, {0x7a1ceALL}));
    for (size_t b = 0; b < config.benchmarks.size(); ++b) {
        const BenchmarkPolicy bench = BenchmarkPolicy::parse(
            config.benchmarks[b], mix_seed(config.seed, {0xbe9cULL, b}), table.n());
        value.benchmarks.push_back(benchmark_test(
            g_rows, bench.evaluate_rows(table.x), run.weights_crossfit.psi1,
            run.weights_crossfit.psi0, config.bootstrap_draws,
            mix_seed(config.seed, {0x7e57ULL, b}), bench.label()));
    }

    nlohmann::json report;
    report["schema"] = "v1";
    report["config"] = config.to_json();
    report["normalization"] = normalization_json(table);
    report["model"] = run.model.to_json();
    report["bands"] = bands;
    report["value"] = value.to_json();
    if (table.norm.y_normalized) {
        const double range = table.norm.y_max - table.norm.y_min;
        report["value_raw_scale"] = {{"v_hat", table.norm.y_min + range * value.v_hat},
                                     {"ci_lo", table.norm.y_min + range * value.ci_lo},
                                     {"ci_hi", table.norm.y_min + range * value.ci_hi}};
    }
    nlohmann::json warnings = nlohmann::json::array();
    for (const auto& w : run.warnings) warnings.push_back(w);
    report["diagnostics"] = {{"warnings", warnings}, {"n", table.n()}, {"d", table.dim()}};
    return report;
}

std::string dump_report(const nlohmann::json& report) { return report.dump(2) + "\n"; }

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open output file: " + path);
    out << contents;
    if (!out) throw DataError("failed writing output file: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace polinf
