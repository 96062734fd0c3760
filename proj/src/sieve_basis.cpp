#include "polinf/sieve_basis.hpp"

#include <cmath>

#include "polinf/errors.hpp"

namespace polinf {

int BasisSpec::total_terms() const {
    int k = 1;
    for (int j = 0; j < dim; ++j) k *= per_dim_order;
    return k;
}

void BasisSpec::validate() const {
    if (per_dim_order < 1) throw ConfigError("sieve order must be >= 1");
    if (dim < 1) throw ConfigError("basis dimension must be >= 1");
    if (total_terms() > 4096) throw ConfigError("sieve too large: k^d > 4096");
}

SieveBasis::SieveBasis(BasisSpec spec) : spec_(spec) { spec_.validate(); }

Eigen::VectorXd SieveBasis::univariate(double t, int k) {
    // Legendre recurrence on [-1,1], shifted and scaled so that
    // int_0^1 p_a p_b = delta_ab; p_m carries the factor sqrt(2m+1).
    Eigen::VectorXd p(k);
    const double u = 2.0 * t - 1.0;
    double prev = 1.0, cur = u;
    for (int m = 0; m < k; ++m) {
        double raw;
        if (m == 0) raw = 1.0;
        else if (m == 1) raw = u;
        else {
            raw = ((2.0 * m - 1.0) * u * cur - (m - 1.0) * prev) / static_cast<double>(m);
            prev = cur;
            cur = raw;
        }
        p[m] = std::sqrt(2.0 * m + 1.0) * raw;
    }
    return p;
}

Eigen::VectorXd SieveBasis::eval(const Eigen::VectorXd& x) const {
    const int d = spec_.dim;
    const int k = spec_.per_dim_order;
    if (x.size() != d) throw DataError("basis evaluation point has wrong dimension");

    Eigen::MatrixXd uni(d, k);
    for (int j = 0; j < d; ++j) {
        double t = x[j];
        if (!std::isfinite(t)) throw NumericError("basis evaluation at non-finite coordinate");
        if (t < 0.0 || t > 1.0) {
            t = t < 0.0 ? 0.0 : 1.0;
            clamp_count_.fetch_add(1, std::memory_order_relaxed);
        }
        uni.row(j) = univariate(t, k).transpose();
    }

    const int total = spec_.total_terms();
    Eigen::VectorXd out(total);
    // Lexicographic multi-index order: last coordinate varies fastest.
    for (int idx = 0; idx < total; ++idx) {
        int rem = idx;
        double prod = 1.0;
        for (int j = d - 1; j >= 0; --j) {
            prod *= uni(j, rem % k);
            rem /= k;
        }
        out[idx] = prod;
    }
    return out;
}

Eigen::MatrixXd SieveBasis::eval_rows(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd out(x.rows(), spec_.total_terms());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = eval(x.row(i).transpose()).transpose();
    return out;
}

double SieveBasis::complexity_xi() const {
    Eigen::VectorXd corner = Eigen::VectorXd::Ones(spec_.dim);
    return eval(corner).norm();
}

void gauss_legendre_01(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
    if (n < 1) throw ConfigError("Gauss-Legendre rule needs n >= 1");
    nodes.resize(n);
    weights.resize(n);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double t = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int m = 2; m <= n; ++m) {
                const double p2 = ((2.0 * m - 1.0) * t * p1 - (m - 1.0) * p0) / m;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            const double step = p1 / dp;
            t -= step;
            if (std::abs(step) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - t * t) * dp * dp);
        nodes[i] = 0.5 * (1.0 - t);
        nodes[n - 1 - i] = 0.5 * (1.0 + t);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
}

}  // namespace polinf
