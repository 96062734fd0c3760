#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace polinf {

enum class ProblemKind { max_score, utility, welfare };

ProblemKind problem_kind_from_string(std::string_view name);
std::string to_string(ProblemKind kind);
bool problem_requires_treatment(ProblemKind kind);

// Raw observations after ingestion: outcome y, optional binary treatment a
// in {0,1}, covariates x in [0,1]^d.
struct ObservationTable {
    Eigen::VectorXd y;
    std::optional<Eigen::VectorXd> a;
    Eigen::MatrixXd x;  // n x d

    struct Normalization {
        Eigen::VectorXd x_min, x_max;  // empty when no normalization applied
        bool y_normalized = false;
        double y_min = 0.0, y_max = 0.0;
    } norm;

    int n() const { return static_cast<int>(y.size()); }
    int dim() const { return static_cast<int>(x.cols()); }
    void validate(ProblemKind kind) const;
};

// Per-row weights of the classification risk (psi+, psi- >= 0) and of the
// value functional (psi1, psi0, signed). fold_of_row records which
// cross-fitting fold produced each row's nuisance predictions.
struct WeightedSample {
    Eigen::VectorXd psi_plus, psi_minus;
    Eigen::VectorXd psi1, psi0;
    std::vector<int> fold_of_row;

    int n() const { return static_cast<int>(psi_plus.size()); }
};

// y in {0,1}: psi+ = 1 - y, psi- = y; value weights psi1 = y, psi0 = 1 - y.
WeightedSample weights_max_score(const ObservationTable& table);

// y in {-1,1}; signed gain u = b(x) * (y + 1 - 2 c(x)).
// psi1 = u, psi0 = -u, psi+ = 2 max(-u, 0), psi- = 2 max(u, 0).
WeightedSample weights_utility(const ObservationTable& table,
                               const std::function<double(const Eigen::VectorXd&)>& b,
                               const std::function<double(const Eigen::VectorXd&)>& c);

// AIPW weights from per-row nuisance predictions. pi is clipped to
// [0.01, 0.99] (overlap enforcement) before use.
//   psi1 = a (y - mu1) / pi + mu1
//   psi0 = (1 - a) (y - mu0) / (1 - pi) + mu0
//   psi+ = psi1^- + psi0^+, psi- = psi1^+ + psi0^-
WeightedSample weights_aipw(const ObservationTable& table,
                            const Eigen::VectorXd& mu1_hat,
                            const Eigen::VectorXd& mu0_hat,
                            const Eigen::VectorXd& pi_hat);

// Convenience overload taking nuisance functions of the covariate row.
WeightedSample weights_aipw(const ObservationTable& table,
                            const std::function<double(const Eigen::VectorXd&)>& mu1,
                            const std::function<double(const Eigen::VectorXd&)>& mu0,
                            const std::function<double(const Eigen::VectorXd&)>& pi);

inline constexpr double kPropensityFloor = 0.01;

}  // namespace polinf
