#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "polinf/pipeline.hpp"
#include "polinf/problems.hpp"
#include "polinf/surrogate_loss.hpp"

namespace polinf {

// Two-covariate treatment-effect design:
//   Y = A * Delta(X) + S(X) + u,  u ~ N(0,1),  A in {-1,1},
//   A = 2 Bernoulli(pi(X)) - 1,
//   Delta(x) = tanh((1, x') gamma), S(x) = sin(x' beta_S),
//   pi(x) = logistic(x' beta_pi),
//   X1 ~ Uniform[0,1], X2 = (education level in {7..18}) / 18.
// Treatment is recoded to {0,1} before estimators see it.
struct DgpSpec {
    Eigen::Vector3d gamma{0.0, -1.0, -1.0};
    Eigen::Vector2d beta_S{-1.0, 1.0};
    Eigen::Vector2d beta_pi{1.0, -1.0};
    int n = 500;
    std::uint64_t seed = 0;
    Eigen::VectorXd edu_probs = default_edu_probs();

    // Triangular mass on {7..18} peaking at 12 years.
    static Eigen::VectorXd default_edu_probs();

    double delta(double x1, double x2) const;
    double baseline(double x1, double x2) const;
    double propensity(double x1, double x2) const;

    nlohmann::json to_json() const;
};

ObservationTable draw_dataset(const DgpSpec& spec);

// Closed-form conditional risk weights of the AIPW problem at the true
// nuisance: C1(x) = E[psi+ | X=x], C0(x) = E[psi- | X=x]. Their contrast is
// C0 - C1 = E[psi1 - psi0 | X] = 2 Delta(x).
double oracle_c1(const DgpSpec& spec, double x1, double x2);
double oracle_c0(const DgpSpec& spec, double x1, double x2);

// Surrogate-optimal policy at x: pointwise argmin of C1 phi(-g) + C0 phi(g).
double oracle_g_star(const DgpSpec& spec, LossKind loss, double x1, double x2);

// 0-1-optimal treatment direction sign(Delta(x)).
int oracle_sign(const DgpSpec& spec, double x1, double x2);

// Population value of a sign policy (+1 treat / -1 control as a function of
// x) by quasi-random quadrature over the covariate law.
double oracle_policy_value(const DgpSpec& spec,
                           const std::function<int(double, double)>& sign_policy, long points);

// Optimal value E[ S(X) + |Delta(X)| ] by the same quadrature.
double oracle_v0(const DgpSpec& spec, long points = 1000000);

// --- Monte Carlo drivers -------------------------------------------------

struct ExperimentScale {
    int replications = 200;
    int bootstrap_draws = 300;

    static ExperimentScale desk() { return {200, 300}; }
    static ExperimentScale paper() { return {1000, 1000}; }
};

struct SizeConfig {
    int n = 250;
    LossKind loss = LossKind::logistic;
    int sieve_k = 2;
    int panel = 1;  // 1: H0 g <= 0, gamma = (0,-1,-1)/sqrt(n); 2: mirrored
    int replications = 200;
    int bootstrap_draws = 300;
    double alpha = 0.05;
    int grid_points = 201;
    int m = 2;
    NuisanceConfig nuisance;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct SizeCell {
    SizeConfig config;
    int rejections = 0;
    double nonrejection_rate = 0.0;
};

SizeCell run_size_experiment(const SizeConfig& config);

struct RejectionConfig {
    int n = 500;
    LossKind loss = LossKind::logistic;
    int sieve_k = 3;
    Eigen::Vector3d gamma{0.0, -1.0, -1.0};  // fixed non-local effect
    std::vector<std::string> benchmarks{"everyone", "random:p=0.5"};
    int replications = 200;
    int bootstrap_draws = 300;
    double alpha = 0.05;
    int m = 2;
    NuisanceConfig nuisance;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct RejectionRow {
    std::string benchmark;
    double reject_two_sided = 0.0;
    double reject_left = 0.0;
    double reject_right = 0.0;
};

std::vector<RejectionRow> run_rejection_experiment(const RejectionConfig& config);

struct NormalityConfig {
    int n = 500;
    LossKind loss = LossKind::logistic;
    int sieve_k = 3;
    Eigen::Vector3d gamma{0.0, -1.0, -1.0};
    int replications = 500;
    int m = 2;
    NuisanceConfig nuisance;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct NormalityRule {
    std::string name;
    std::vector<double> values;        // raw value estimates per replication
    std::vector<double> standardized;  // (v - mean) / std over replications
    double mean = 0.0, stddev = 0.0;
    double ks_stat = 0.0, ks_pvalue = 0.0;
};

struct NormalityResult {
    std::vector<NormalityRule> rules;  // est_optimal, oracle_optimal, everyone, random
    double ks_est_vs_oracle = 0.0;     // two-sample KS distance
};

NormalityResult run_normality_diagnostic(const NormalityConfig& config);

// --- Small distribution helpers used by the diagnostics ------------------

double ks_statistic_normal(std::span<const double> sample);
double two_sample_ks(std::span<const double> a, std::span<const double> b);
double ks_pvalue(double stat, int n);

// Per-replication pipeline configuration shared by the drivers.
PipelineConfig simulation_pipeline_config(LossKind loss, int sieve_k, int m,
                                          const NuisanceConfig& nuisance, std::uint64_t seed);

}  // namespace polinf
