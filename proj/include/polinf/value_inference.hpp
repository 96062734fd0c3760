#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <json.hpp>

#include "polinf/problems.hpp"

namespace polinf {

// A comparison policy evaluable row-wise. Randomized policies freeze their
// assignment at construction so test statistics are reproducible.
class BenchmarkPolicy {
public:
    enum class Kind { treat_everyone, treat_no_one, random, custom };

    static BenchmarkPolicy everyone();
    static BenchmarkPolicy no_one();
    static BenchmarkPolicy random(double p, std::uint64_t seed, int n_rows);
    static BenchmarkPolicy custom(std::function<double(const Eigen::VectorXd&)> rule,
                                  std::string label);

    // "everyone" | "none" | "random:p=0.5" (n_rows and seed for the frozen draw)
    static BenchmarkPolicy parse(std::string_view spec, std::uint64_t seed, int n_rows);

    Kind kind() const { return kind_; }
    const std::string& label() const { return label_; }

    // g_dagger per row; sign determines the assignment (treat iff >= 0).
    Eigen::VectorXd evaluate_rows(const Eigen::MatrixXd& x) const;

private:
    Kind kind_ = Kind::treat_everyone;
    std::string label_;
    double p_ = 0.5;
    std::uint64_t seed_ = 0;
    Eigen::VectorXd frozen_;  // random kind: realized +-1 per row
    std::function<double(const Eigen::VectorXd&)> rule_;
};

// Plug-in value (1/n) sum_i [ psi1_i 1{g_i >= 0} + psi0_i 1{g_i < 0} ].
// Ties g = 0 count as treated.
double value_estimate(const Eigen::VectorXd& g_rows, const Eigen::VectorXd& psi1,
                      const Eigen::VectorXd& psi0);

// Centered per-row scores psi1 1{g>=0} + psi0 1{g<0} - v_hat (mean exactly 0).
Eigen::VectorXd scores_sL(const Eigen::VectorXd& g_rows, const Eigen::VectorXd& psi1,
                          const Eigen::VectorXd& psi0, double v_hat);

// One bootstrap draw sqrt(n) * mean_i(score_i * delta_i).
double bootstrap_value_draw(const Eigen::VectorXd& scores, const Eigen::VectorXd& delta);

struct BenchmarkTest {
    std::string label;
    double v_hat = 0.0;        // value under the estimated policy
    double v_dagger = 0.0;     // value under the benchmark
    double t_stat = 0.0;       // sqrt(n) (v_hat - v_dagger)
    double p_two_sided = 1.0;  // fraction of |Z| >= |T|
    double p_left = 1.0;       // fraction of Z <= T
    double p_right = 1.0;      // fraction of Z >= T

    nlohmann::json to_json() const;
};

struct ValueReport {
    double v_hat = 0.0;
    double sigma_v = 0.0;  // sample std of the bootstrap draws
    double ci_lo = 0.0, ci_hi = 0.0;
    double one_sided_lower = 0.0;  // lower confidence bound at level 1 - alpha
    double alpha = 0.05;
    int n_draws = 0;
    int n_obs = 0;
    std::uint64_t seed = 0;
    std::vector<BenchmarkTest> benchmarks;

    nlohmann::json to_json() const;
};

// Two-sided CI [v_hat -+ q_{1-alpha/2}(|Z|)/sqrt(n)] and the one-sided lower
// bound v_hat - q_{1-alpha}(Z)/sqrt(n); per-draw streams (seed, draw index).
ValueReport value_ci(const Eigen::VectorXd& g_rows, const Eigen::VectorXd& psi1,
                     const Eigen::VectorXd& psi0, double alpha, int n_draws,
                     std::uint64_t seed);

// Welfare comparison against a benchmark policy: T = sqrt(n)(V(g_hat) - V(g+)),
// bootstrap draws from the centered difference score
//   (psi1 - psi0)(1{g_hat >= 0} - 1{g_dagger >= 0}) - (V(g_hat) - V(g_dagger)).
BenchmarkTest benchmark_test(const Eigen::VectorXd& g_rows, const Eigen::VectorXd& g_dagger_rows,
                             const Eigen::VectorXd& psi1, const Eigen::VectorXd& psi0,
                             int n_draws, std::uint64_t seed, const std::string& label = "");

}  // namespace polinf
