#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "polinf/pipeline.hpp"
#include "polinf/policy_inference.hpp"
#include "polinf/problems.hpp"
#include "polinf/value_inference.hpp"

namespace polinf {

// Everything a run needs; serialized into every report so results can be
// reproduced bit-identically from the report alone.
struct RunConfig {
    ProblemKind problem = ProblemKind::welfare;
    LossKind loss = LossKind::logistic;
    int sieve_k = 3;
    int m = 2;
    NuisanceConfig nuisance;  // k=3, cv_folds=5, grid_size=50
    double alpha = 0.05;
    int bootstrap_draws = 1000;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string grid_spec;
    double utility_b = 1.0;
    double utility_c = 0.5;
    std::vector<std::string> benchmarks;
    std::string data_path;

    void validate() const;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);

    // Flat key-value text with [section] headers or dotted keys; '#' comments.
    void apply_config_file(const std::string& path);
    void apply_key(const std::string& key, const std::string& value);

    PipelineConfig pipeline_config() const;
};

// CSV with a header row; columns: y, optional a, covariates x1..xd.
// Covariates are min-max normalized to [0,1]; for welfare problems the
// outcome is normalized the same way. Treatment coded {0,1} or {-1,1}
// (the latter is mapped to {0,1} at ingestion).
ObservationTable ingest_csv(const std::string& path, ProblemKind problem);

// Full run: ingest -> nuisance (crossfit + fullsample) -> weights -> policy
// fit -> sandwich -> bands (all three sides) -> value CI -> benchmark tests.
// Returns the versioned report; identical config + data reproduce it
// bit-for-bit.
nlohmann::json run_pipeline(const RunConfig& config);

std::string dump_report(const nlohmann::json& report);
void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace polinf
