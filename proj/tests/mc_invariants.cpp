// Monte Carlo invariants that are too slow for the unit suite: sieve sign
// recovery on a discrete design, closed-form recovery, uniform-band coverage
// of the true policy, and the welfare ordering of assignment rules.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "polinf/oracle.hpp"
#include "polinf/parallel.hpp"
#include "polinf/pipeline.hpp"
#include "polinf/policy_fit.hpp"
#include "polinf/policy_inference.hpp"
#include "polinf/rng.hpp"
#include "polinf/simulation.hpp"

using namespace polinf;

namespace {

int g_failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
    if (!pass) ++g_failures;
}

// Three-point covariate design with exponential-noise weights whose
// conditional means are the prescribed C1, C0.
struct DiscreteWeightDgp {
    Eigen::Vector3d support{0.1, 0.5, 0.9};
    Eigen::Vector3d c1, c0;

    void draw(int n, std::uint64_t seed, Eigen::MatrixXd& basis_rows, Eigen::VectorXd& wp,
              Eigen::VectorXd& wm, const SieveBasis& basis) const {
        auto eng = make_engine(seed);
        std::uniform_int_distribution<int> pick(0, 2);
        std::exponential_distribution<double> expo(1.0);
        basis_rows.resize(n, basis.spec().total_terms());
        wp.resize(n);
        wm.resize(n);
        for (int i = 0; i < n; ++i) {
            const int j = pick(eng);
            basis_rows.row(i) =
                basis.eval(Eigen::VectorXd::Constant(1, support[j])).transpose();
            wp[i] = c1[j] * expo(eng);
            wm[i] = c0[j] * expo(eng);
        }
    }
};

void check_sign_recovery() {
    const SieveBasis basis(BasisSpec{3, 1});
    auto eng = make_engine(211);
    std::uniform_real_distribution<double> unif(0.3, 2.0);

    int checked = 0, correct = 0;
    for (int rep = 0; rep < 6; ++rep) {
        DiscreteWeightDgp dgp;
        for (int j = 0; j < 3; ++j) {
            dgp.c1[j] = unif(eng);
            dgp.c0[j] = unif(eng);
            while (std::abs(dgp.c0[j] - dgp.c1[j]) < 0.2) dgp.c0[j] = unif(eng);
        }
        Eigen::MatrixXd rows;
        Eigen::VectorXd wp, wm;
        dgp.draw(5000, 300 + rep, rows, wp, wm, basis);
        for (LossKind kind : {LossKind::logistic, LossKind::exponential, LossKind::squared}) {
            const Eigen::VectorXd beta = fit_fold(rows, wp, wm, SurrogateLoss(kind));
            for (int j = 0; j < 3; ++j) {
                const double g =
                    basis.eval(Eigen::VectorXd::Constant(1, dgp.support[j])).dot(beta);
                ++checked;
                if ((g > 0) == (dgp.c0[j] > dgp.c1[j])) ++correct;
            }
        }
    }
    report("discrete-design sign recovery", correct == checked,
           std::to_string(correct) + "/" + std::to_string(checked) + " support points");
}

void check_closed_form_recovery() {
    const SieveBasis basis(BasisSpec{3, 1});
    auto eng = make_engine(223);
    std::uniform_real_distribution<double> unif(0.4, 2.0);

    double worst = 0.0;
    for (int rep = 0; rep < 3; ++rep) {
        DiscreteWeightDgp dgp;
        for (int j = 0; j < 3; ++j) {
            dgp.c1[j] = unif(eng);
            dgp.c0[j] = unif(eng);
        }
        Eigen::MatrixXd rows;
        Eigen::VectorXd wp, wm;
        dgp.draw(20000, 400 + rep, rows, wp, wm, basis);
        const Eigen::VectorXd beta = fit_fold(rows, wp, wm, SurrogateLoss(LossKind::logistic));
        for (int j = 0; j < 3; ++j) {
            const double g = basis.eval(Eigen::VectorXd::Constant(1, dgp.support[j])).dot(beta);
            const double target = std::log(dgp.c0[j] / dgp.c1[j]);
            worst = std::max(worst, std::abs(g - target));
        }
    }
    report("logistic closed-form recovery at n=20000", worst <= 0.1,
           "max |g_hat - log(C0/C1)| = " + std::to_string(worst));
}

void check_band_coverage() {
    const int n = 250, reps = 200, draws = 300;
    DgpSpec proto;
    const double local = 1.0 / std::sqrt(static_cast<double>(n));
    proto.gamma = Eigen::Vector3d(0.0, -local, -local);
    proto.n = n;

    const Eigen::VectorXd fixed = (Eigen::VectorXd(2) << 0.0, 10.0 / 18.0).finished();
    const EvalGrid grid = EvalGrid::line(2, 0, 0.05, 0.95, 201, fixed);
    Eigen::VectorXd g_star(grid.size());
    for (int i = 0; i < grid.size(); ++i)
        g_star[i] = oracle_g_star(proto, LossKind::logistic, grid.points(i, 0),
                                  grid.points(i, 1));

    std::vector<char> covered(reps, 0);
    parallel_for(reps, resolve_threads(0), [&](int rep) {
        DgpSpec dgp = proto;
        dgp.seed = mix_seed(501, {static_cast<std::uint64_t>(rep)});
        const ObservationTable table = draw_dataset(dgp);
        const PipelineConfig pcfg = simulation_pipeline_config(
            LossKind::logistic, 2, 2, NuisanceConfig{},
            mix_seed(502, {static_cast<std::uint64_t>(rep)}));
        const PolicyPipeline run = fit_policy_pipeline(table, pcfg);
        const PolicyBand band = build_band(
            run.model, run.basis_rows, run.weights_fullsample.psi_plus,
            run.weights_fullsample.psi_minus, grid, 0.05, draws,
            mix_seed(503, {static_cast<std::uint64_t>(rep)}), BandSide::two_sided);
        bool ok = true;
        for (int i = 0; i < grid.size() && ok; ++i)
            ok = band.lo[i] <= g_star[i] && g_star[i] <= band.hi[i];
        covered[rep] = ok ? 1 : 0;
    });
    int hits = 0;
    for (char c : covered) hits += c;
    const double rate = static_cast<double>(hits) / reps;
    report("two-sided band coverage of the true policy", rate >= 0.90,
           "coverage " + std::to_string(rate) + " at nominal 0.95 (n=250, S=200, B=300)");
}

void check_welfare_ordering() {
    NormalityConfig cfg;
    cfg.n = 300;
    cfg.replications = 200;
    cfg.seed = 601;
    cfg.threads = resolve_threads(0);
    const NormalityResult result = run_normality_diagnostic(cfg);
    const double est = result.rules[0].mean;
    const double random = result.rules[3].mean;
    report("estimated-optimal welfare beats random assignment", est >= random,
           "mean est " + std::to_string(est) + " vs random " + std::to_string(random));
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    check_sign_recovery();
    check_closed_form_recovery();
    check_band_coverage();
    check_welfare_ordering();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("mc_invariants finished in %.1fs with %d failure(s)\n", secs, g_failures);
    return g_failures == 0 ? 0 : 1;
}
