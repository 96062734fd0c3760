#include "polinf/pipeline.hpp"

#include <cmath>

#include "polinf/errors.hpp"
#include "polinf/rng.hpp"

namespace polinf {

PolicyPipeline fit_policy_pipeline(const ObservationTable& table, const PipelineConfig& config) {
    table.validate(config.problem);
    const int n = table.n();

    PolicyPipeline run;
    run.folds = FoldPartition::make(n, config.m, mix_seed(config.seed, {0xf01d5ULL}));

    if (config.problem == ProblemKind::welfare) {
        NuisanceConfig nc = config.nuisance;
        nc.seed = mix_seed(config.seed, {0xe7a0ULL});
        run.nuisance_crossfit = fit_nuisance(table, run.folds, NuisanceMode::crossfit, nc);
        nc.seed = mix_seed(config.seed, {0xe7a1ULL});
        run.nuisance_fullsample = fit_nuisance(table, run.folds, NuisanceMode::fullsample, nc);

        Eigen::VectorXd mu1, mu0, pi;
        run.nuisance_crossfit->predict(table, run.folds, mu1, mu0, pi);
        run.weights_crossfit = weights_aipw(table, mu1, mu0, pi);
        run.nuisance_fullsample->predict(table, run.folds, mu1, mu0, pi);
        run.weights_fullsample = weights_aipw(table, mu1, mu0, pi);
    } else if (config.problem == ProblemKind::utility) {
        const double b = config.utility_b, c = config.utility_c;
        auto bfn = [b](const Eigen::VectorXd&) { return b; };
        auto cfn = [c](const Eigen::VectorXd&) { return c; };
        run.weights_crossfit = weights_utility(table, bfn, cfn);
        run.weights_fullsample = run.weights_crossfit;
    } else {
        run.weights_crossfit = weights_max_score(table);
        run.weights_fullsample = run.weights_crossfit;
    }
    run.weights_crossfit.fold_of_row = run.folds.assignment;
    run.weights_fullsample.fold_of_row = run.folds.assignment;

    const BasisSpec spec{config.sieve_k, table.dim()};
    spec.validate();
    const double k_total = static_cast<double>(spec.total_terms());
    if (std::pow(k_total, 4.1) > static_cast<double>(n))
        run.warnings.push_back("sieve size K=" + std::to_string(spec.total_terms()) +
                               " fails K^4.1 <= n at n=" + std::to_string(n));

    const SieveBasis basis(spec);
    run.basis_rows = basis.eval_rows(table.x);

    const SurrogateLoss loss(config.loss);
    const auto fold_rows = run.folds.fold_indices();
    std::vector<Eigen::VectorXd> betas;
    std::vector<FitDiagnostics> diags;
    for (int f = 0; f < config.m; ++f) {
        const auto& rows = fold_rows[f];
        Eigen::MatrixXd p(rows.size(), spec.total_terms());
        Eigen::VectorXd wp(rows.size()), wm(rows.size());
        for (size_t i = 0; i < rows.size(); ++i) {
            p.row(i) = run.basis_rows.row(rows[i]);
            wp[i] = run.weights_crossfit.psi_plus[rows[i]];
            wm[i] = run.weights_crossfit.psi_minus[rows[i]];
        }
        FitDiagnostics d;
        betas.push_back(fit_fold(p, wp, wm, loss, &d));
        diags.push_back(d);
    }
    run.model = aggregate(spec, config.loss, std::move(betas), std::move(diags));
    compute_sandwich(run.model, run.basis_rows, run.weights_fullsample.psi_plus,
                     run.weights_fullsample.psi_minus);
    return run;
}

}  // namespace polinf
