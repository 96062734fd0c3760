#include "polinf/oracle.hpp"

#include <cmath>
#include <cstdint>

#include "polinf/errors.hpp"

namespace polinf::oracle {

void DiscreteDesign::validate() const {
    const int j = size();
    if (j == 0) throw DataError("discrete design is empty");
    if (c1.size() != j || c0.size() != j) throw DataError("discrete design weight size mismatch");
    if (std::abs(mass.sum() - 1.0) > 1e-12) throw DataError("discrete design masses must sum to 1");
    if ((c1.array() < 0).any() || (c0.array() < 0).any())
        throw DataError("discrete design risk weights must be nonnegative");
}

DiscreteDesign DiscreteDesign::from_thetas(const Eigen::VectorXd& mass,
                                           const Eigen::VectorXd& theta1,
                                           const Eigen::VectorXd& theta0) {
    DiscreteDesign d;
    d.mass = mass;
    d.theta1 = theta1;
    d.theta0 = theta0;
    d.c1 = theta1.cwiseMin(0.0).cwiseAbs() + theta0.cwiseMax(0.0);
    d.c0 = theta1.cwiseMax(0.0) + theta0.cwiseMin(0.0).cwiseAbs();
    d.validate();
    return d;
}

std::vector<int> zero_one_optimal_signs(const DiscreteDesign& design) {
    design.validate();
    std::vector<int> signs(design.size());
    for (int j = 0; j < design.size(); ++j) {
        if (design.c0[j] > design.c1[j]) signs[j] = 1;
        else if (design.c0[j] < design.c1[j]) signs[j] = -1;
        else signs[j] = 0;
    }
    return signs;
}

double zero_one_risk(const DiscreteDesign& design, const std::vector<int>& signs) {
    double risk = 0.0;
    for (int j = 0; j < design.size(); ++j)
        risk += design.mass[j] * (signs[j] >= 0 ? design.c1[j] : design.c0[j]);
    return risk;
}

std::vector<int> exhaustive_zero_one_signs(const DiscreteDesign& design) {
    design.validate();
    const int j = design.size();
    if (j > 20) throw ConfigError("exhaustive sign search limited to 20 support points");
    double best_risk = std::numeric_limits<double>::infinity();
    std::uint32_t best_bits = 0;
    for (std::uint32_t bits = 0; bits < (1u << j); ++bits) {
        double risk = 0.0;
        for (int p = 0; p < j; ++p)
            risk += design.mass[p] * ((bits >> p) & 1u ? design.c1[p] : design.c0[p]);
        if (risk < best_risk) {
            best_risk = risk;
            best_bits = bits;
        }
    }
    std::vector<int> signs(j);
    for (int p = 0; p < j; ++p) signs[p] = ((best_bits >> p) & 1u) ? 1 : -1;
    return signs;
}

double population_value(const DiscreteDesign& design, const std::vector<int>& signs) {
    if (static_cast<int>(signs.size()) != design.size())
        throw DataError("sign assignment size mismatch");
    double v = 0.0;
    for (int p = 0; p < design.size(); ++p)
        v += design.mass[p] * (signs[p] >= 0 ? design.theta1[p] : design.theta0[p]);
    return v;
}

namespace {

// Extended-precision loss evaluation kept local so the oracle does not share
// code with the production evaluators it is used to check.
long double phi_ld(LossKind kind, long double t) {
    switch (kind) {
        case LossKind::logistic:
            return t > 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
        case LossKind::exponential:
            return std::exp(-t);
        case LossKind::squared:
            return (1.0L - t) * (1.0L - t);
    }
    return 0.0L;
}

}  // namespace

double golden_section_argmin(LossKind kind, double c1, double c0, double lo, double hi) {
    if (!(c1 > 0.0) || !(c0 > 0.0))
        throw NumericError("golden-section oracle requires strictly positive weights");
    const long double invphi = 0.6180339887498948482045868343656381L;
    long double a = lo, b = hi;
    auto f = [&](long double g) {
        return static_cast<long double>(c1) * phi_ld(kind, -g) +
               static_cast<long double>(c0) * phi_ld(kind, g);
    };
    long double x1 = b - invphi * (b - a);
    long double x2 = a + invphi * (b - a);
    long double f1 = f(x1), f2 = f(x2);
    // ~160 iterations shrink the bracket far below the flatness limit.
    for (int it = 0; it < 200 && (b - a) > 1e-14L; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    // Parabolic refinement through three points around the bracket midpoint.
    const long double m = 0.5L * (a + b);
    const long double h = 1e-7L;
    const long double fm = f(m), fp = f(m + h), fn = f(m - h);
    const long double denom = fp - 2.0L * fm + fn;
    long double refined = m;
    if (denom > 0.0L) refined = m - 0.5L * h * (fp - fn) / denom;
    return static_cast<double>(refined);
}

double mixed_quadrature(const std::function<double(double, int)>& f,
                        const Eigen::VectorXd& mass, long points) {
    if (points <= 0) throw ConfigError("quadrature needs a positive point count");
    // Kronecker (golden-ratio) low-discrepancy sequence on [0,1].
    const double alpha = 0.6180339887498949;
    double acc = 0.0;
    for (int level = 0; level < mass.size(); ++level) {
        if (mass[level] == 0.0) continue;
        double inner = 0.0;
        double x = 0.5;
        for (long i = 0; i < points; ++i) {
            x += alpha;
            if (x >= 1.0) x -= 1.0;
            inner += f(x, level);
        }
        acc += mass[level] * inner / static_cast<double>(points);
    }
    return acc;
}

}  // namespace polinf::oracle
