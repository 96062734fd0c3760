#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "polinf/surrogate_loss.hpp"

namespace polinf::oracle {

// Finite-support design with per-point conditional risk weights
// c1 = E[psi+ | X = x], c0 = E[psi- | X = x] and, for value problems,
// theta1 = E[psi1 | X = x], theta0 = E[psi0 | X = x].
struct DiscreteDesign {
    Eigen::VectorXd mass;    // sums to 1
    Eigen::VectorXd c1, c0;  // >= 0
    Eigen::VectorXd theta1, theta0;

    int size() const { return static_cast<int>(mass.size()); }
    void validate() const;

    // Builds risk weights from value weights via the positive/negative-part
    // identity c1 = theta1^- + theta0^+, c0 = theta1^+ + theta0^-.
    static DiscreteDesign from_thetas(const Eigen::VectorXd& mass,
                                      const Eigen::VectorXd& theta1,
                                      const Eigen::VectorXd& theta0);
};

// Pointwise 0-1-risk-optimal signs: +1 iff c0 > c1, -1 iff c0 < c1, 0 on ties.
std::vector<int> zero_one_optimal_signs(const DiscreteDesign& design);

// Exhaustive 0-1 risk minimization over all 2^J sign assignments (J <= 20).
// Returns the risk-minimizing signs in {-1, +1}; ties resolved toward +1.
std::vector<int> exhaustive_zero_one_signs(const DiscreteDesign& design);

double zero_one_risk(const DiscreteDesign& design, const std::vector<int>& signs);

// Population value sum(mass_j * (theta1_j if sign >= 0 else theta0_j)).
double population_value(const DiscreteDesign& design, const std::vector<int>& signs);

// Derivative-free 1-D minimizer of g -> c1*phi(-g) + c0*phi(g) over
// [lo, hi]: golden-section bracketing in extended precision followed by a
// parabolic refinement, so the argmin is resolved well below 1e-10.
// Independent of the closed forms in SurrogateLoss::pointwise_argmin.
double golden_section_argmin(LossKind kind, double c1, double c0,
                             double lo = -SurrogateLoss::kSaturationCap,
                             double hi = SurrogateLoss::kSaturationCap);

// Quasi-random quadrature of f(x1, level) over x1 ~ Uniform[0,1] mixed with a
// discrete level drawn from `mass`. Used for population quantities of
// continuous-by-discrete covariate laws.
double mixed_quadrature(const std::function<double(double, int)>& f,
                        const Eigen::VectorXd& mass, long points);

}  // namespace polinf::oracle
