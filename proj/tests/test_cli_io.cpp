#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "polinf/cli_io.hpp"
#include "polinf/errors.hpp"
#include "polinf/simulation.hpp"

using namespace polinf;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& contents)
        : path("/tmp/polinf_test_" + name) {
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

std::string dataset_csv(int n, std::uint64_t seed) {
    DgpSpec spec;
    spec.n = n;
    spec.seed = seed;
    const ObservationTable t = draw_dataset(spec);
    std::string csv = "y,a,x1,x2\n";
    for (int i = 0; i < n; ++i) {
        csv += std::to_string(t.y[i]) + "," + std::to_string((*t.a)[i]) + "," +
               std::to_string(t.x(i, 0)) + "," + std::to_string(t.x(i, 1)) + "\n";
    }
    return csv;
}

}  // namespace

TEST_CASE("csv ingestion applies the min-max normalizations") {
    TempFile f("norm.csv", "y,a,x1\n0,1,0\n5,0,5\n10,1,10\n");
    const ObservationTable t = ingest_csv(f.path, ProblemKind::welfare);
    CHECK(t.x(0, 0) == 0.0);
    CHECK(t.x(1, 0) == 0.5);
    CHECK(t.x(2, 0) == 1.0);
    CHECK(t.y[0] == 0.0);
    CHECK(t.y[1] == 0.5);
    CHECK(t.y[2] == 1.0);
    CHECK(t.norm.y_normalized);
    CHECK(t.norm.y_min == 0.0);
    CHECK(t.norm.y_max == 10.0);

    TempFile g("unit.csv", "y,x1\n0,0.25\n1,0\n1,1\n");
    const ObservationTable u = ingest_csv(g.path, ProblemKind::max_score);
    CHECK(u.x(0, 0) == 0.25);  // already [0,1]: unchanged
    CHECK_FALSE(u.norm.y_normalized);
    CHECK_FALSE(u.a.has_value());
}

TEST_CASE("csv ingestion errors carry diagnostics") {
    TempFile constant("const.csv", "y,a,x1\n1,1,3\n2,0,3\n3,1,3\n");
    CHECK_THROWS_AS(ingest_csv(constant.path, ProblemKind::welfare), DataError);

    TempFile missing("missing.csv", "y,x1\n1,0.5\n0,0.6\n");
    CHECK_THROWS_AS(ingest_csv(missing.path, ProblemKind::welfare), DataError);

    TempFile alpha_cell("cell.csv", "y,x1\n1,0.5\nx,0.6\n");
    try {
        ingest_csv(alpha_cell.path, ProblemKind::max_score);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 3") != std::string::npos);
        CHECK(msg.find("'y'") != std::string::npos);
    }

    TempFile badcol("badcol.csv", "y,z1\n1,0.5\n0,0.6\n");
    CHECK_THROWS_AS(ingest_csv(badcol.path, ProblemKind::max_score), DataError);
}

TEST_CASE("treatment coded {-1,1} is mapped to {0,1}") {
    TempFile f("pm1.csv", "y,a,x1\n0.5,-1,0\n0.2,1,0.5\n0.9,-1,1\n");
    const ObservationTable t = ingest_csv(f.path, ProblemKind::welfare);
    CHECK((*t.a)[0] == 0.0);
    CHECK((*t.a)[1] == 1.0);
    CHECK((*t.a)[2] == 0.0);

    TempFile bad("badA.csv", "y,a,x1\n0.5,2,0\n0.2,1,0.5\n");
    CHECK_THROWS_AS(ingest_csv(bad.path, ProblemKind::welfare), DataError);
}

TEST_CASE("config file parsing with sections and dotted keys") {
    TempFile f("cfg.ini",
               "problem = welfare\n"
               "loss = exponential\n"
               "seed = 42\n"
               "# comment line\n"
               "[sieve]\n"
               "k = 4\n"
               "[nuisance]\n"
               "k = 2\n"
               "cv_folds = 3\n"
               "grid_size = 25\n");
    RunConfig cfg;
    cfg.apply_config_file(f.path);
    CHECK(cfg.loss == LossKind::exponential);
    CHECK(cfg.sieve_k == 4);
    CHECK(cfg.nuisance.k == 2);
    CHECK(cfg.nuisance.cv_folds == 3);
    CHECK(cfg.nuisance.grid_size == 25);
    CHECK(cfg.seed == 42);

    RunConfig dotted;
    dotted.apply_key("sieve.k", "5");
    CHECK(dotted.sieve_k == 5);
    CHECK_THROWS_AS(dotted.apply_key("unknown.key", "1"), ConfigError);
    CHECK_THROWS_AS(dotted.apply_key("alpha", "zebra"), ConfigError);
}

TEST_CASE("invalid alpha fails before any data is read") {
    RunConfig cfg;
    cfg.alpha = 1.5;
    cfg.data_path = "/nonexistent/file.csv";
    CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);  // not a DataError
}

TEST_CASE("config JSON round trip") {
    RunConfig cfg;
    cfg.problem = ProblemKind::utility;
    cfg.loss = LossKind::squared;
    cfg.sieve_k = 4;
    cfg.seed = 17;
    cfg.benchmarks = {"everyone", "random:p=0.25"};
    cfg.grid_spec = "x1=0:1:5";
    cfg.data_path = "some.csv";
    const RunConfig back = RunConfig::from_json(cfg.to_json());
    CHECK(back.to_json().dump() == cfg.to_json().dump());
}

TEST_CASE("end-to-end pipeline report is reproducible bit-for-bit") {
    TempFile data("e2e.csv", dataset_csv(150, 7));

    RunConfig cfg;
    cfg.problem = ProblemKind::welfare;
    cfg.loss = LossKind::logistic;
    cfg.sieve_k = 2;
    cfg.bootstrap_draws = 120;
    cfg.seed = 31;
    cfg.grid_spec = "x1=0.05:0.95:9,x2=0.5556";
    cfg.nuisance.grid_size = 10;
    cfg.benchmarks = {"everyone", "random:p=0.5"};
    cfg.data_path = data.path;

    const nlohmann::json report = run_pipeline(cfg);
    CHECK(report.at("schema") == "v1");
    CHECK(report.contains("model"));
    CHECK(report.at("bands").size() == 3);
    CHECK(report.contains("value"));
    CHECK(report.at("value").at("benchmarks").size() == 2);

    // Rerun from the embedded config.
    const RunConfig embedded = RunConfig::from_json(report.at("config"));
    const nlohmann::json again = run_pipeline(embedded);
    CHECK(dump_report(again) == dump_report(report));

    // Raw-scale value maps back through the outcome normalization.
    const double range =
        report.at("normalization").at("y_max").get<double>() -
        report.at("normalization").at("y_min").get<double>();
    const double v_norm = report.at("value").at("v_hat").get<double>();
    const double v_raw = report.at("value_raw_scale").at("v_hat").get<double>();
    const double expected =
        report.at("normalization").at("y_min").get<double>() + range * v_norm;
    CHECK(std::abs(v_raw - expected) <= 1e-9 * std::max(1.0, std::abs(expected)));
}

TEST_CASE("max-score pipeline runs without a treatment column") {
    std::string csv = "y,x1\n";
    DgpSpec spec;
    spec.n = 80;
    spec.seed = 3;
    const ObservationTable t = draw_dataset(spec);
    for (int i = 0; i < t.n(); ++i)
        csv += std::to_string(t.y[i] > 0 ? 1 : 0) + "," + std::to_string(t.x(i, 0)) + "\n";
    TempFile data("ms.csv", csv);

    RunConfig cfg;
    cfg.problem = ProblemKind::max_score;
    cfg.sieve_k = 2;
    cfg.bootstrap_draws = 100;
    cfg.grid_spec = "x1=0.1:0.9:5";
    cfg.data_path = data.path;
    const nlohmann::json report = run_pipeline(cfg);
    CHECK(report.at("diagnostics").at("n") == 80);
}
