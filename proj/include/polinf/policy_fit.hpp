#pragma once

#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "polinf/sieve_basis.hpp"
#include "polinf/surrogate_loss.hpp"

namespace polinf {

struct FitDiagnostics {
    int newton_iterations = 0;
    double grad_norm = 0.0;
    double objective = 0.0;
};

// Fitted sieve policy: per-fold coefficients, their average, and the
// full-sample sandwich matrices used for variance and bootstrap inference.
struct SieveModel {
    BasisSpec spec;
    LossKind loss = LossKind::logistic;
    std::vector<Eigen::VectorXd> beta_per_fold;
    Eigen::VectorXd beta_bar;
    Eigen::MatrixXd Q, Sigma;  // empty until compute_sandwich
    std::vector<FitDiagnostics> diagnostics;

    double g_hat(const Eigen::VectorXd& x) const;
    Eigen::VectorXd g_hat_rows(const Eigen::MatrixXd& basis_rows) const;

    nlohmann::json to_json() const;
    static SieveModel from_json(const nlohmann::json& j);
};

// Newton minimization with step-halving of the fold's sample surrogate risk
//   mean_i [ psi+_i phi(-p_i'b) + psi-_i phi(p_i'b) ]
// from b = 0; Hessian ridged by 1e-10 I. Weights are normalized internally
// by their mean mass (the argmin is invariant), so diagnostics and the
// stopping rule ||grad|| <= 1e-8 (1 + ||b||) are on the normalized scale.
// Throws NumericError on a singular Hessian or after 200 iterations.
Eigen::VectorXd fit_fold(const Eigen::MatrixXd& basis_rows, const Eigen::VectorXd& psi_plus,
                         const Eigen::VectorXd& psi_minus, const SurrogateLoss& loss,
                         FitDiagnostics* diag = nullptr);

SieveModel aggregate(const BasisSpec& spec, LossKind loss,
                     std::vector<Eigen::VectorXd> beta_per_fold,
                     std::vector<FitDiagnostics> diagnostics = {});

// Full-sample sandwich at the aggregated policy with full-sample weights:
//   Q     = mean_i [ (psi+ phi''(-g) + psi- phi''(g)) p p' ]
//   Sigma = mean_i [ (-psi+ phi'(-g) + psi- phi'(g))^2 p p' ]
// Enforces lambda_min(Q) > 1e-8 (singular-design error otherwise).
void compute_sandwich(SieveModel& model, const Eigen::MatrixXd& basis_rows,
                      const Eigen::VectorXd& psi_plus, const Eigen::VectorXd& psi_minus);

// sigma(x) = sqrt(p(x)' Q^{-1} Sigma Q^{-1} p(x)) per grid row.
Eigen::VectorXd sigma_hat_rows(const SieveModel& model, const Eigen::MatrixXd& basis_rows);
double sigma_hat(const SieveModel& model, const Eigen::VectorXd& x);

// Per-row score values -psi+ phi'(-g) + psi- phi'(g) at the aggregated policy.
Eigen::VectorXd score_values(const SieveModel& model, const Eigen::MatrixXd& basis_rows,
                             const Eigen::VectorXd& psi_plus, const Eigen::VectorXd& psi_minus);

}  // namespace polinf
