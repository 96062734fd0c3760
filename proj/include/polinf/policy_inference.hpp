#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "polinf/policy_fit.hpp"
#include "polinf/problems.hpp"

namespace polinf {

// Finite evaluation grid over the inference region, points in [0,1]^d.
struct EvalGrid {
    Eigen::MatrixXd points;  // G x d

    int size() const { return static_cast<int>(points.rows()); }
    int dim() const { return static_cast<int>(points.cols()); }

    // One free dimension over [lo, hi] with `count` points, the others fixed.
    static EvalGrid line(int dim, int free_axis, double lo, double hi, int count,
                         const Eigen::VectorXd& fixed);

    // "x1=0.05:0.95:201,x2=0.5556"; each dimension either lo:hi:count or a
    // fixed value. Dimensions default to 0:1:<default_count> when omitted.
    static EvalGrid parse(std::string_view spec, int dim, int default_count = 201);

    void validate() const;
};

enum class BandSide { two_sided, lower, upper };

BandSide band_side_from_string(std::string_view name);
std::string to_string(BandSide side);

struct PolicyBand {
    EvalGrid grid;
    Eigen::VectorXd g_hat, sigma_hat;  // sigma on the sqrt(n)-scaled convention
    Eigen::VectorXd lo, hi;            // band endpoints for g itself
    Eigen::VectorXd lo_pointwise, hi_pointwise;  // normal pointwise bands, diagnostic only
    double critical_value = 0.0;
    BandSide side = BandSide::two_sided;
    double alpha = 0.05;
    int n_draws = 0;
    int n_obs = 0;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

// Precomputed pieces of the score-bootstrap t-process
//   t_b(x) = p(x)' Q^{-1} sqrt(n) mean_i[ omega_i score_i p(X_i) ] / sigma(x).
// Draws share the read-only context and may run concurrently.
class ScoreBootstrap {
public:
    ScoreBootstrap(const SieveModel& model, const Eigen::MatrixXd& sample_basis_rows,
                   const Eigen::VectorXd& psi_plus, const Eigen::VectorXd& psi_minus,
                   const Eigen::MatrixXd& grid_basis_rows);

    int n_obs() const { return static_cast<int>(score_basis_.rows()); }
    int grid_size() const { return static_cast<int>(grid_proj_.rows()); }
    const Eigen::VectorXd& sigma() const { return sigma_; }

    // Per-grid-point t values for one multiplier vector omega (length n).
    Eigen::VectorXd t_draw(const Eigen::VectorXd& omega) const;

private:
    Eigen::MatrixXd score_basis_;  // n x K, rows score_i * p(X_i)'
    Eigen::MatrixXd grid_proj_;    // G x K, rows p(x_g)' Q^{-1}
    Eigen::VectorXd sigma_;        // G
};

// Empirical quantile at the ceil(q*B) order statistic (type-1 convention).
//   two_sided: (1-alpha) quantile of sup |t|
//   lower:     (1-alpha) quantile of sup t
//   upper:     alpha quantile of inf t
// The draws passed in must already be the per-draw sup/|sup|/inf statistics.
double critical_value(std::span<const double> draws, double alpha, BandSide side);

double type1_quantile(std::span<const double> values, double q);

// B score-bootstrap draws with per-draw RNG streams derived from
// (seed, draw index); deterministic given seed. Band endpoints:
//   two_sided: g_hat -+ cv * sigma / sqrt(n)
//   lower:     g_hat - cv_{1-alpha}(sup t) * sigma / sqrt(n)   (upper endpoint +inf)
//   upper:     g_hat - cv_{alpha}(inf t) * sigma / sqrt(n)     (lower endpoint -inf)
PolicyBand build_band(const SieveModel& model, const Eigen::MatrixXd& sample_basis_rows,
                      const Eigen::VectorXd& psi_plus, const Eigen::VectorXd& psi_minus,
                      const EvalGrid& grid, double alpha, int n_draws, std::uint64_t seed,
                      BandSide side);

enum class UniformNull { all_leq_zero, all_geq_zero };

struct SignTestResult {
    bool reject = false;
    std::vector<int> witness_indices;  // grid points violating the null band
};

// all_leq_zero (needs a lower band): reject iff sup_x lower(x) > 0.
// all_geq_zero (needs an upper band): reject iff inf_x upper(x) < 0.
SignTestResult uniform_sign_test(const PolicyBand& band, UniformNull null);

}  // namespace polinf
