#include <doctest.h>

#include <cmath>
#include <random>

#include "polinf/errors.hpp"
#include "polinf/policy_fit.hpp"
#include "polinf/rng.hpp"

using namespace polinf;

namespace {

double fold_objective(const Eigen::MatrixXd& p, const Eigen::VectorXd& wp,
                      const Eigen::VectorXd& wm, const SurrogateLoss& loss,
                      const Eigen::VectorXd& beta) {
    const Eigen::VectorXd g = p * beta;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i)
        acc += wp[i] * loss.value(-g[i]) + wm[i] * loss.value(g[i]);
    return acc / static_cast<double>(g.size());
}

Eigen::VectorXd fold_gradient(const Eigen::MatrixXd& p, const Eigen::VectorXd& wp,
                              const Eigen::VectorXd& wm, const SurrogateLoss& loss,
                              const Eigen::VectorXd& beta) {
    const Eigen::VectorXd g = p * beta;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(p.cols());
    for (Eigen::Index i = 0; i < g.size(); ++i)
        grad += (-wp[i] * loss.d1(-g[i]) + wm[i] * loss.d1(g[i])) * p.row(i).transpose();
    return grad / static_cast<double>(g.size());
}

}  // namespace

TEST_CASE("fold fit on closed-form cases") {
    const int n = 40;
    const Eigen::MatrixXd p = Eigen::MatrixXd::Ones(n, 1);

    {
        const Eigen::VectorXd beta = fit_fold(p, Eigen::VectorXd::Zero(n),
                                              Eigen::VectorXd::Ones(n),
                                              SurrogateLoss(LossKind::squared));
        CHECK(beta[0] == doctest::Approx(1.0).epsilon(1e-10));
    }
    {
        const double sp = 0.7, sm = 2.1;
        const Eigen::VectorXd beta =
            fit_fold(p, Eigen::VectorXd::Constant(n, sp), Eigen::VectorXd::Constant(n, sm),
                     SurrogateLoss(LossKind::logistic));
        CHECK(beta[0] == doctest::Approx(std::log(sm / sp)).epsilon(1e-8));
    }
    {
        auto eng = make_engine(91);
        std::uniform_real_distribution<double> unif(0.1, 2.0);
        Eigen::VectorXd w(n);
        for (int i = 0; i < n; ++i) w[i] = unif(eng);
        const Eigen::VectorXd beta = fit_fold(p, w, w, SurrogateLoss(LossKind::exponential));
        CHECK(beta[0] == 0.0);  // symmetric weights: minimizer at the origin
    }
}

TEST_CASE("analytic gradient matches central finite differences") {
    auto eng = make_engine(93);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int n = 50, k = 4;
    Eigen::MatrixXd p(n, k);
    Eigen::VectorXd wp(n), wm(n);
    for (int i = 0; i < n; ++i) {
        p(i, 0) = 1.0;
        for (int j = 1; j < k; ++j) p(i, j) = 2.0 * unif(eng) - 1.0;
        wp[i] = unif(eng) + 0.1;
        wm[i] = unif(eng) + 0.1;
    }

    const double h = 1e-6;
    for (LossKind kind : {LossKind::logistic, LossKind::exponential, LossKind::squared}) {
        const SurrogateLoss loss(kind);
        Eigen::VectorXd beta(k);
        for (int j = 0; j < k; ++j) beta[j] = unif(eng) - 0.5;
        const Eigen::VectorXd grad = fold_gradient(p, wp, wm, loss, beta);
        for (int j = 0; j < k; ++j) {
            Eigen::VectorXd bp = beta, bm = beta;
            bp[j] += h;
            bm[j] -= h;
            const double fd =
                (fold_objective(p, wp, wm, loss, bp) - fold_objective(p, wp, wm, loss, bm)) /
                (2 * h);
            CHECK(grad[j] == doctest::Approx(fd).epsilon(1e-5));
        }

        // First-order condition at the fitted optimum.
        const Eigen::VectorXd beta_hat = fit_fold(p, wp, wm, loss);
        const Eigen::VectorXd g_opt = fold_gradient(p, wp, wm, loss, beta_hat);
        CHECK(g_opt.norm() <= 1e-8 * (1.0 + beta_hat.norm()));
    }
}

TEST_CASE("aggregation averages fold coefficients") {
    const BasisSpec spec{2, 1};
    Eigen::VectorXd b1(2), b2(2);
    b1 << 1.0, -2.0;
    b2 << 3.0, 2.0;

    const SieveModel same = aggregate(spec, LossKind::logistic, {b1, b1});
    CHECK(same.beta_bar == b1);

    const SieveModel sym = aggregate(spec, LossKind::logistic, {b1, -b1});
    CHECK(sym.beta_bar.cwiseAbs().maxCoeff() == 0.0);

    const SieveModel single = aggregate(spec, LossKind::logistic, {b2});
    CHECK(single.beta_bar == b2);
}

TEST_CASE("sandwich matrices on a closed-form case") {
    const int n = 25;
    SieveModel model = aggregate(BasisSpec{1, 1}, LossKind::squared,
                                 {Eigen::VectorXd::Ones(1)});
    const Eigen::MatrixXd p = Eigen::MatrixXd::Ones(n, 1);
    compute_sandwich(model, p, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n));
    CHECK(model.Q(0, 0) == doctest::Approx(2.0));
    CHECK(model.Sigma(0, 0) == doctest::Approx(0.0));

    SieveModel degenerate = aggregate(BasisSpec{1, 1}, LossKind::squared,
                                      {Eigen::VectorXd::Ones(1)});
    CHECK_THROWS_AS(
        compute_sandwich(degenerate, p, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)),
        NumericError);
}

TEST_CASE("duplicating every row leaves the sandwich unchanged") {
    auto eng = make_engine(97);
    std::uniform_real_distribution<double> unif(0.1, 1.5);
    const int n = 30, k = 3;
    Eigen::MatrixXd p(n, k);
    Eigen::VectorXd wp(n), wm(n);
    for (int i = 0; i < n; ++i) {
        p(i, 0) = 1.0;
        p(i, 1) = unif(eng);
        p(i, 2) = unif(eng) - 0.75;
        wp[i] = unif(eng);
        wm[i] = unif(eng);
    }
    Eigen::VectorXd beta(k);
    beta << 0.2, -0.4, 0.1;

    SieveModel one = aggregate(BasisSpec{3, 1}, LossKind::logistic, {beta});
    compute_sandwich(one, p, wp, wm);

    Eigen::MatrixXd p2(2 * n, k);
    Eigen::VectorXd wp2(2 * n), wm2(2 * n);
    p2 << p, p;
    wp2 << wp, wp;
    wm2 << wm, wm;
    SieveModel two = aggregate(BasisSpec{3, 1}, LossKind::logistic, {beta});
    compute_sandwich(two, p2, wp2, wm2);

    CHECK((one.Q - two.Q).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((one.Sigma - two.Sigma).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("sigma_hat scalar algebra") {
    SieveModel model = aggregate(BasisSpec{1, 1}, LossKind::squared, {Eigen::VectorXd::Ones(1)});
    model.Q = Eigen::MatrixXd::Constant(1, 1, 4.0);
    model.Sigma = Eigen::MatrixXd::Constant(1, 1, 9.0);
    CHECK(sigma_hat(model, Eigen::VectorXd::Constant(1, 0.4)) ==
          doctest::Approx(std::sqrt(9.0) / 4.0));

    model.Sigma.setZero();
    CHECK(sigma_hat(model, Eigen::VectorXd::Constant(1, 0.4)) == 0.0);

    SieveModel ident = aggregate(BasisSpec{3, 1}, LossKind::squared,
                                 {Eigen::VectorXd::Zero(3)});
    ident.Q = Eigen::MatrixXd::Identity(3, 3);
    ident.Sigma = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.7);
    const SieveBasis basis(BasisSpec{3, 1});
    CHECK(sigma_hat(ident, x) == doctest::Approx(basis.eval(x).norm()).epsilon(1e-12));
}

TEST_CASE("scaling all weights rescales the sandwich but not the fit") {
    auto eng = make_engine(101);
    std::uniform_real_distribution<double> unif(0.1, 1.5);
    const int n = 60, k = 3;
    Eigen::MatrixXd p(n, k);
    Eigen::VectorXd wp(n), wm(n);
    for (int i = 0; i < n; ++i) {
        p(i, 0) = 1.0;
        p(i, 1) = unif(eng);
        p(i, 2) = unif(eng) - 0.75;
        wp[i] = unif(eng);
        wm[i] = unif(eng);
    }
    const SurrogateLoss loss(LossKind::logistic);
    const double lambda = 4.0;  // power of two keeps Newton steps bit-identical

    const Eigen::VectorXd beta = fit_fold(p, wp, wm, loss);
    const Eigen::VectorXd beta_scaled = fit_fold(p, lambda * wp, lambda * wm, loss);
    CHECK((beta - beta_scaled).cwiseAbs().maxCoeff() == 0.0);

    SieveModel base = aggregate(BasisSpec{3, 1}, LossKind::logistic, {beta});
    compute_sandwich(base, p, wp, wm);
    SieveModel scaled = aggregate(BasisSpec{3, 1}, LossKind::logistic, {beta});
    compute_sandwich(scaled, p, (lambda * wp).eval(), (lambda * wm).eval());

    CHECK((scaled.Q - lambda * base.Q).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((scaled.Sigma - lambda * lambda * base.Sigma).cwiseAbs().maxCoeff() <= 1e-10);

    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.3);
    CHECK(sigma_hat(scaled, x) == doctest::Approx(sigma_hat(base, x)).epsilon(1e-12));
}

TEST_CASE("model JSON serialization round-trips bit-exactly") {
    auto eng = make_engine(103);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::VectorXd b1(4), b2(4);
    for (int i = 0; i < 4; ++i) {
        b1[i] = unif(eng);
        b2[i] = unif(eng);
    }
    SieveModel model = aggregate(BasisSpec{2, 2}, LossKind::exponential, {b1, b2},
                                 {FitDiagnostics{3, 1e-9, 0.5}, FitDiagnostics{4, 2e-9, 0.6}});
    model.Q = Eigen::MatrixXd::Random(4, 4);
    model.Q = (model.Q + model.Q.transpose()).eval();
    model.Sigma = Eigen::MatrixXd::Random(4, 4);
    model.Sigma = (model.Sigma * model.Sigma.transpose()).eval();

    const SieveModel restored = SieveModel::from_json(model.to_json());
    CHECK(restored.to_json().dump() == model.to_json().dump());
    CHECK(restored.beta_bar == model.beta_bar);
    CHECK(restored.Q == model.Q);
}
