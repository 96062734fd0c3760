#pragma once

#include <atomic>
#include <cstdint>

#include <Eigen/Core>

namespace polinf {

struct BasisSpec {
    int per_dim_order = 2;  // univariate functions per dimension (degrees 0..k-1)
    int dim = 1;

    int total_terms() const;
    void validate() const;
};

// Tensor products of orthonormal shifted Legendre polynomials on [0,1]^d.
// Multi-indices run in lexicographic order, so the first term is the
// constant function 1.
class SieveBasis {
public:
    explicit SieveBasis(BasisSpec spec);

    const BasisSpec& spec() const { return spec_; }

    // K-vector of basis values at x. Coordinates outside [0,1] are clamped
    // and counted (new data may exceed the training min/max); non-finite
    // coordinates throw NumericError.
    Eigen::VectorXd eval(const Eigen::VectorXd& x) const;

    // Row-wise evaluation of an n x d matrix of points; returns n x K.
    Eigen::MatrixXd eval_rows(const Eigen::MatrixXd& x) const;

    // xi_k = sup_x ||p(x)||, attained at any corner of the cube; equals k^d.
    double complexity_xi() const;

    std::int64_t clamp_count() const { return clamp_count_.load(); }
    void reset_clamp_count() { clamp_count_.store(0); }

    // Univariate orthonormal shifted Legendre values p_0..p_{k-1} at t in [0,1].
    static Eigen::VectorXd univariate(double t, int k);

private:
    BasisSpec spec_;
    mutable std::atomic<std::int64_t> clamp_count_{0};
};

// Gauss-Legendre nodes and weights on [0,1]; used by orthonormality checks.
void gauss_legendre_01(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

}  // namespace polinf
