#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "polinf/nuisance.hpp"
#include "polinf/policy_fit.hpp"
#include "polinf/problems.hpp"

namespace polinf {

struct PipelineConfig {
    ProblemKind problem = ProblemKind::welfare;
    LossKind loss = LossKind::logistic;
    int sieve_k = 3;
    int m = 2;  // cross-fitting folds
    NuisanceConfig nuisance;
    std::uint64_t seed = 0;
    double utility_b = 1.0;  // constant b(x), c(x) for the utility problem
    double utility_c = 0.5;
};

// One fitted run: fold partition, cross-fitted weights (policy fit and value
// estimation), full-sample weights (variance and bootstrap), and the
// aggregated sieve model with its sandwich matrices.
struct PolicyPipeline {
    FoldPartition folds;
    WeightedSample weights_crossfit;
    WeightedSample weights_fullsample;
    Eigen::MatrixXd basis_rows;  // policy basis at the sample points
    SieveModel model;
    std::optional<NuisanceFit> nuisance_crossfit, nuisance_fullsample;
    std::vector<std::string> warnings;

    Eigen::VectorXd g_hat_sample() const { return model.g_hat_rows(basis_rows); }
};

PolicyPipeline fit_policy_pipeline(const ObservationTable& table, const PipelineConfig& config);

}  // namespace polinf
