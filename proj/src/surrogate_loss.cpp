#include "polinf/surrogate_loss.hpp"

#include <cmath>

#include "polinf/errors.hpp"

namespace polinf {

LossKind loss_kind_from_string(std::string_view name) {
    if (name == "logistic") return LossKind::logistic;
    if (name == "exponential") return LossKind::exponential;
    if (name == "squared") return LossKind::squared;
    throw ConfigError("unknown loss kind: '" + std::string(name) +
                      "' (expected logistic|exponential|squared)");
}

std::string to_string(LossKind kind) {
    switch (kind) {
        case LossKind::logistic: return "logistic";
        case LossKind::exponential: return "exponential";
        case LossKind::squared: return "squared";
    }
    return "?";
}

namespace {

// log(1 + exp(-t)) without overflow for large |t|.
inline double softplus_neg(double t) {
    if (t > 0.0) return std::log1p(std::exp(-t));
    return -t + std::log1p(std::exp(t));
}

// 1 / (1 + exp(-t)) evaluated from the stable side.
inline double sigmoid(double t) {
    if (t >= 0.0) {
        const double e = std::exp(-t);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

}  // namespace

LossEval SurrogateLoss::eval(double t) const {
    if (!std::isfinite(t)) throw NumericError("surrogate loss evaluated at non-finite point");
    switch (kind_) {
        case LossKind::logistic: {
            const double s = sigmoid(t);  // = 1 - 1/(1+e^t)
            return {softplus_neg(t), -(1.0 - s), s * (1.0 - s)};
        }
        case LossKind::exponential: {
            const double e = std::exp(-t);
            return {e, -e, e};
        }
        case LossKind::squared: {
            const double r = 1.0 - t;
            return {r * r, -2.0 * r, 2.0};
        }
    }
    throw NumericError("unreachable loss kind");
}

double SurrogateLoss::pointwise_argmin(double c1, double c0) const {
    if (!(std::isfinite(c1) && std::isfinite(c0)) || c1 < 0.0 || c0 < 0.0)
        throw NumericError("pointwise risk weights must be finite and nonnegative");
    if (c1 == 0.0 && c0 == 0.0)
        throw NumericError("degenerate pointwise risk: both weights are zero");
    if (c1 == 0.0) return kSaturationCap;
    if (c0 == 0.0) return -kSaturationCap;
    const double ratio = c0 / c1;
    switch (kind_) {
        case LossKind::logistic: return std::log(ratio);
        case LossKind::exponential: return 0.5 * std::log(ratio);
        case LossKind::squared: return (ratio - 1.0) / (ratio + 1.0);
    }
    throw NumericError("unreachable loss kind");
}

}  // namespace polinf
