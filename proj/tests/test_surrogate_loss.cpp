#include <doctest.h>

#include <cmath>
#include <random>

#include "polinf/errors.hpp"
#include "polinf/oracle.hpp"
#include "polinf/rng.hpp"
#include "polinf/surrogate_loss.hpp"

using namespace polinf;

namespace {
const LossKind kAllKinds[] = {LossKind::logistic, LossKind::exponential, LossKind::squared};
}

TEST_CASE("loss values and derivatives at zero") {
    const SurrogateLoss logistic(LossKind::logistic);
    auto e = logistic.eval(0.0);
    CHECK(e.value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(e.d1 == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(e.d2 == doctest::Approx(0.25).epsilon(1e-15));

    const SurrogateLoss squared(LossKind::squared);
    e = squared.eval(0.0);
    CHECK(e.value == 1.0);
    CHECK(e.d1 == -2.0);
    CHECK(e.d2 == 2.0);

    const SurrogateLoss exponential(LossKind::exponential);
    e = exponential.eval(0.0);
    CHECK(e.value == 1.0);
    CHECK(e.d1 == -1.0);
    CHECK(e.d2 == 1.0);
}

TEST_CASE("derivatives match finite differences") {
    const double h1 = 1e-6, h2 = 1e-4;  // wider step for the second difference
    auto eng = make_engine(7);
    std::uniform_real_distribution<double> unif(-4.0, 4.0);
    for (LossKind kind : kAllKinds) {
        const SurrogateLoss loss(kind);
        for (int rep = 0; rep < 200; ++rep) {
            const double t = unif(eng);
            const auto e = loss.eval(t);
            const double fd1 = (loss.value(t + h1) - loss.value(t - h1)) / (2 * h1);
            const double fd2 =
                (loss.value(t + h2) - 2 * loss.value(t) + loss.value(t - h2)) / (h2 * h2);
            CHECK(e.d1 == doctest::Approx(fd1).epsilon(1e-6));
            CHECK(e.d2 == doctest::Approx(fd2).epsilon(1e-5));
            CHECK(e.d2 > 0.0);
        }
        CHECK(loss.d1(0.0) < 0.0);
    }
}

TEST_CASE("non-finite input is a domain error") {
    const SurrogateLoss loss(LossKind::logistic);
    CHECK_THROWS_AS(loss.eval(std::numeric_limits<double>::quiet_NaN()), NumericError);
    CHECK_THROWS_AS(loss.eval(std::numeric_limits<double>::infinity()), NumericError);
}

TEST_CASE("pointwise argmin closed forms") {
    CHECK(SurrogateLoss(LossKind::logistic).pointwise_argmin(1.0, 1.0) == 0.0);
    CHECK(SurrogateLoss(LossKind::logistic).pointwise_argmin(1.0, 2.0) ==
          doctest::Approx(0.693147180559945).epsilon(1e-14));
    CHECK(SurrogateLoss(LossKind::squared).pointwise_argmin(1.0, 3.0) ==
          doctest::Approx(0.5).epsilon(1e-14));
    CHECK(SurrogateLoss(LossKind::exponential).pointwise_argmin(1.0, 4.0) ==
          doctest::Approx(0.693147180559945).epsilon(1e-14));
}

TEST_CASE("degenerate weights saturate or throw") {
    for (LossKind kind : kAllKinds) {
        const SurrogateLoss loss(kind);
        CHECK(loss.pointwise_argmin(0.0, 1.0) == SurrogateLoss::kSaturationCap);
        CHECK(loss.pointwise_argmin(1.0, 0.0) == -SurrogateLoss::kSaturationCap);
        CHECK_THROWS_AS(loss.pointwise_argmin(0.0, 0.0), NumericError);
    }
}

TEST_CASE("argmin agrees with the golden-section oracle") {
    auto eng = make_engine(11);
    std::uniform_real_distribution<double> unif(0.05, 5.0);
    for (LossKind kind : kAllKinds) {
        const SurrogateLoss loss(kind);
        for (int rep = 0; rep < 300; ++rep) {
            const double c1 = unif(eng), c0 = unif(eng);
            const double closed = loss.pointwise_argmin(c1, c0);
            const double numeric = oracle::golden_section_argmin(kind, c1, c0);
            CHECK(std::abs(closed - numeric) <= 1e-10);
        }
    }
}

TEST_CASE("argmin sign matches the 0-1 risk direction") {
    auto eng = make_engine(13);
    std::uniform_real_distribution<double> unif(0.05, 5.0);
    for (LossKind kind : kAllKinds) {
        const SurrogateLoss loss(kind);
        for (int rep = 0; rep < 500; ++rep) {
            const double c1 = unif(eng), c0 = unif(eng);
            if (c1 == c0) continue;
            const double g = loss.pointwise_argmin(c1, c0);
            CHECK((g > 0) == (c0 > c1));
        }
    }
}

TEST_CASE("argmin is invariant to positive scaling of the weights") {
    auto eng = make_engine(17);
    std::uniform_real_distribution<double> unif(0.05, 5.0);
    for (LossKind kind : kAllKinds) {
        const SurrogateLoss loss(kind);
        for (int rep = 0; rep < 200; ++rep) {
            const double c1 = unif(eng), c0 = unif(eng);
            const double base = loss.pointwise_argmin(c1, c0);
            // Power-of-two scalings keep the quotient c0/c1 bit-identical.
            for (double lambda : {0.25, 0.5, 2.0, 1024.0})
                CHECK(loss.pointwise_argmin(lambda * c1, lambda * c0) == base);
            CHECK(loss.pointwise_argmin(3.7 * c1, 3.7 * c0) ==
                  doctest::Approx(base).epsilon(1e-12));
        }
    }
}
