#include <doctest.h>

#include <cmath>
#include <random>

#include "polinf/errors.hpp"
#include "polinf/policy_inference.hpp"
#include "polinf/rng.hpp"

using namespace polinf;

namespace {

// Small fitted model with nondegenerate sandwich matrices for band tests.
struct Fixture {
    SieveModel model;
    Eigen::MatrixXd basis_rows;
    Eigen::VectorXd wp, wm;

    explicit Fixture(int n = 80, std::uint64_t seed = 107) {
        auto eng = make_engine(seed);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Eigen::MatrixXd x(n, 1);
        wp.resize(n);
        wm.resize(n);
        for (int i = 0; i < n; ++i) {
            x(i, 0) = unif(eng);
            wp[i] = unif(eng) + 0.2;
            wm[i] = unif(eng) + 0.2;
        }
        const BasisSpec spec{2, 1};
        const SieveBasis basis(spec);
        basis_rows = basis.eval_rows(x);
        const Eigen::VectorXd beta = fit_fold(basis_rows, wp, wm, SurrogateLoss(LossKind::logistic));
        model = aggregate(spec, LossKind::logistic, {beta});
        compute_sandwich(model, basis_rows, wp, wm);
    }
};

}  // namespace

TEST_CASE("grid parsing") {
    const EvalGrid g = EvalGrid::parse("x1=0.05:0.95:201,x2=0.5556", 2);
    CHECK(g.size() == 201);
    CHECK(g.points(0, 0) == doctest::Approx(0.05));
    CHECK(g.points(200, 0) == doctest::Approx(0.95));
    CHECK(g.points(77, 1) == doctest::Approx(0.5556));

    const EvalGrid fixed = EvalGrid::parse("x1=0.25", 1);
    CHECK(fixed.size() == 1);

    const EvalGrid dflt = EvalGrid::parse("", 1, 11);
    CHECK(dflt.size() == 11);
    CHECK(dflt.points(0, 0) == 0.0);
    CHECK(dflt.points(10, 0) == 1.0);

    CHECK_THROWS_AS(EvalGrid::parse("x3=0:1:5", 2), ConfigError);
    CHECK_THROWS_AS(EvalGrid::parse("y=0:1:5", 2), ConfigError);
    CHECK_THROWS_AS(EvalGrid::parse("x1=0:2:5", 1), ConfigError);  // outside unit cube
}

TEST_CASE("critical value order statistics") {
    std::vector<double> draws(100);
    for (int i = 0; i < 100; ++i) draws[i] = i + 1;
    CHECK(critical_value(draws, 0.05, BandSide::two_sided) == 95.0);
    CHECK(critical_value(draws, 0.05, BandSide::lower) == 95.0);
    CHECK(critical_value(draws, 0.05, BandSide::upper) == 5.0);

    const std::vector<double> constant(200, 3.25);
    CHECK(critical_value(constant, 0.5, BandSide::two_sided) == 3.25);
    CHECK(critical_value(constant, 0.01, BandSide::upper) == 3.25);
}

TEST_CASE("bootstrap t draws: zero, single-row, and sign-flip cases") {
    {
        Fixture f;
        const SieveBasis basis(f.model.spec);
        const EvalGrid grid = EvalGrid::parse("x1=0.1:0.9:7", 1);
        const ScoreBootstrap boot(f.model, f.basis_rows, f.wp, f.wm,
                                  basis.eval_rows(grid.points));
        const Eigen::VectorXd zero = boot.t_draw(Eigen::VectorXd::Zero(f.basis_rows.rows()));
        CHECK(zero.cwiseAbs().maxCoeff() == 0.0);

        auto eng = make_engine(113);
        const Eigen::VectorXd omega = standard_normal(eng, f.basis_rows.rows());
        const Eigen::VectorXd t_pos = boot.t_draw(omega);
        const Eigen::VectorXd t_neg = boot.t_draw(-omega);
        CHECK((t_pos + t_neg).cwiseAbs().maxCoeff() <= 1e-14);
    }
    {
        // n = 1, k = 1: t = score / sqrt(Sigma).
        SieveModel m = aggregate(BasisSpec{1, 1}, LossKind::squared, {Eigen::VectorXd::Ones(1)});
        Eigen::MatrixXd rows = Eigen::MatrixXd::Ones(1, 1);
        Eigen::VectorXd wp = Eigen::VectorXd::Constant(1, 0.5);
        Eigen::VectorXd wm = Eigen::VectorXd::Constant(1, 2.0);
        compute_sandwich(m, rows, wp, wm);
        const ScoreBootstrap boot(m, rows, wp, wm, rows);
        const double score = score_values(m, rows, wp, wm)[0];
        const Eigen::VectorXd t = boot.t_draw(Eigen::VectorXd::Ones(1));
        CHECK(t[0] == doctest::Approx(score / std::sqrt(m.Sigma(0, 0))).epsilon(1e-12));
    }
}

TEST_CASE("bootstrap draws are conditionally centered") {
    Fixture f;
    const SieveBasis basis(f.model.spec);
    const EvalGrid grid = EvalGrid::parse("x1=0.1:0.9:5", 1);
    const ScoreBootstrap boot(f.model, f.basis_rows, f.wp, f.wm, basis.eval_rows(grid.points));

    const int b_draws = 4000;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(grid.size());
    Eigen::VectorXd second = Eigen::VectorXd::Zero(grid.size());
    for (int b = 0; b < b_draws; ++b) {
        auto eng = make_engine(117, {static_cast<std::uint64_t>(b)});
        const Eigen::VectorXd t = boot.t_draw(standard_normal(eng, f.basis_rows.rows()));
        mean += t;
        second += t.cwiseProduct(t);
    }
    mean /= b_draws;
    second /= b_draws;
    for (int i = 0; i < grid.size(); ++i) {
        const double sd = std::sqrt(second[i] - mean[i] * mean[i]);
        CHECK(std::abs(mean[i]) <= 3.0 * sd / std::sqrt(static_cast<double>(b_draws)));
    }
}

TEST_CASE("bands: determinism, nesting, stability, degenerate variance") {
    Fixture f;
    const EvalGrid grid = EvalGrid::parse("x1=0.05:0.95:21", 1);

    const PolicyBand b1 = build_band(f.model, f.basis_rows, f.wp, f.wm, grid, 0.05, 500, 7,
                                     BandSide::two_sided);
    const PolicyBand b2 = build_band(f.model, f.basis_rows, f.wp, f.wm, grid, 0.05, 500, 7,
                                     BandSide::two_sided);
    CHECK(b1.critical_value == b2.critical_value);
    CHECK((b1.lo - b2.lo).cwiseAbs().maxCoeff() == 0.0);

    const PolicyBand wide = build_band(f.model, f.basis_rows, f.wp, f.wm, grid, 0.01, 500, 7,
                                       BandSide::two_sided);
    for (int i = 0; i < grid.size(); ++i) {
        CHECK(wide.lo[i] <= b1.lo[i]);
        CHECK(wide.hi[i] >= b1.hi[i]);
    }

    const PolicyBand b1000 = build_band(f.model, f.basis_rows, f.wp, f.wm, grid, 0.05, 1000, 11,
                                        BandSide::two_sided);
    const PolicyBand b2000 = build_band(f.model, f.basis_rows, f.wp, f.wm, grid, 0.05, 2000, 11,
                                        BandSide::two_sided);
    CHECK(std::abs(b1000.critical_value - b2000.critical_value) <= 0.05);

    // Sigma = 0 on the grid triggers the degenerate-variance error.
    SieveModel degen = f.model;
    degen.Sigma.setZero();
    CHECK_THROWS_AS(build_band(degen, f.basis_rows, f.wp, f.wm, grid, 0.05, 200, 3,
                               BandSide::two_sided),
                    NumericError);
}

TEST_CASE("doubling the weights leaves the band unchanged") {
    Fixture f;
    const EvalGrid grid = EvalGrid::parse("x1=0.05:0.95:11", 1);
    const PolicyBand base =
        build_band(f.model, f.basis_rows, f.wp, f.wm, grid, 0.05, 400, 13, BandSide::two_sided);

    const Eigen::VectorXd wp2 = 2.0 * f.wp, wm2 = 2.0 * f.wm;
    const Eigen::VectorXd beta2 =
        fit_fold(f.basis_rows, wp2, wm2, SurrogateLoss(LossKind::logistic));
    SieveModel m2 = aggregate(f.model.spec, LossKind::logistic, {beta2});
    compute_sandwich(m2, f.basis_rows, wp2, wm2);
    const PolicyBand scaled =
        build_band(m2, f.basis_rows, wp2, wm2, grid, 0.05, 400, 13, BandSide::two_sided);

    CHECK((base.g_hat - scaled.g_hat).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(std::abs(base.critical_value - scaled.critical_value) <= 1e-10);
    CHECK((base.lo - scaled.lo).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("uniform sign tests read the matching one-sided band") {
    Fixture f;
    const EvalGrid grid = EvalGrid::parse("x1=0.05:0.95:11", 1);
    PolicyBand lower =
        build_band(f.model, f.basis_rows, f.wp, f.wm, grid, 0.05, 300, 17, BandSide::lower);

    PolicyBand forced = lower;
    forced.lo = Eigen::VectorXd::Constant(grid.size(), -1.0);
    CHECK_FALSE(uniform_sign_test(forced, UniformNull::all_leq_zero).reject);

    forced.lo[4] = 0.2;
    const SignTestResult res = uniform_sign_test(forced, UniformNull::all_leq_zero);
    CHECK(res.reject);
    REQUIRE(res.witness_indices.size() == 1);
    CHECK(res.witness_indices[0] == 4);

    CHECK_THROWS_AS(uniform_sign_test(lower, UniformNull::all_geq_zero), ConfigError);
}
