#pragma once

#include <string>
#include <string_view>

namespace polinf {

enum class LossKind { logistic, exponential, squared };

LossKind loss_kind_from_string(std::string_view name);
std::string to_string(LossKind kind);

struct LossEval {
    double value;
    double d1;
    double d2;
};

// Strictly convex, twice-differentiable surrogate losses:
//   logistic:    phi(t) = log(1 + exp(-t))
//   exponential: phi(t) = exp(-t)
//   squared:     phi(t) = (1 - t)^2
// All satisfy phi'(0) < 0 and phi''(t) > 0.
class SurrogateLoss {
public:
    explicit SurrogateLoss(LossKind kind) : kind_(kind) {}

    LossKind kind() const { return kind_; }

    // phi(t), phi'(t), phi''(t). Throws NumericError on non-finite t.
    LossEval eval(double t) const;

    double value(double t) const { return eval(t).value; }
    double d1(double t) const { return eval(t).d1; }
    double d2(double t) const { return eval(t).d2; }

    // Saturation bound returned when one of the pointwise risk weights is
    // exactly zero (the conditional risk is then minimized in the limit).
    static constexpr double kSaturationCap = 30.0;

    // Unique minimizer of g -> c1 * phi(-g) + c0 * phi(g) for c1, c0 >= 0,
    // not both zero. Closed forms:
    //   logistic:    log(c0 / c1)
    //   exponential: 0.5 * log(c0 / c1)
    //   squared:     (c0 - c1) / (c0 + c1)
    // c1 == 0 returns +kSaturationCap, c0 == 0 returns -kSaturationCap.
    // Throws NumericError when c1 == c0 == 0 (degenerate risk).
    double pointwise_argmin(double c1, double c0) const;

private:
    LossKind kind_;
};

}  // namespace polinf
