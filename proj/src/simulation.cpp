#include "polinf/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "polinf/errors.hpp"
#include "polinf/oracle.hpp"
#include "polinf/parallel.hpp"
#include "polinf/policy_inference.hpp"
#include "polinf/rng.hpp"
#include "polinf/value_inference.hpp"

namespace polinf {

namespace {

constexpr int kEduMin = 7;
constexpr int kEduLevels = 12;  // education in {7..18}

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// E[(m + s Z)^+] for Z ~ N(0,1), s > 0.
double pos_part_mean(double m, double s) {
    const double r = m / s;
    return m * normal_cdf(r) + s * normal_pdf(r);
}

double neg_part_mean(double m, double s) { return pos_part_mean(m, s) - m; }

double x2_of_level(int level) { return static_cast<double>(kEduMin + level) / 18.0; }

}  // namespace

Eigen::VectorXd DgpSpec::default_edu_probs() {
    Eigen::VectorXd w(kEduLevels);
    for (int i = 0; i < kEduLevels; ++i) {
        const int years = kEduMin + i;
        w[i] = std::max(7.0 - std::abs(years - 12.0), 1.0);
    }
    return w / w.sum();
}

double DgpSpec::delta(double x1, double x2) const {
    return std::tanh(gamma[0] + gamma[1] * x1 + gamma[2] * x2);
}

double DgpSpec::baseline(double x1, double x2) const {
    return std::sin(beta_S[0] * x1 + beta_S[1] * x2);
}

double DgpSpec::propensity(double x1, double x2) const {
    const double eta = beta_pi[0] * x1 + beta_pi[1] * x2;
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

nlohmann::json DgpSpec::to_json() const {
    nlohmann::json probs = nlohmann::json::array();
    for (Eigen::Index i = 0; i < edu_probs.size(); ++i) probs.push_back(edu_probs[i]);
    return nlohmann::json{{"gamma", {gamma[0], gamma[1], gamma[2]}},
                          {"beta_S", {beta_S[0], beta_S[1]}},
                          {"beta_pi", {beta_pi[0], beta_pi[1]}},
                          {"n", n},
                          {"seed", seed},
                          {"edu_probs", probs}};
}

ObservationTable draw_dataset(const DgpSpec& spec) {
    if (spec.n < 2) throw ConfigError("dataset size must be >= 2");
    if (spec.edu_probs.size() != kEduLevels || std::abs(spec.edu_probs.sum() - 1.0) > 1e-9)
        throw ConfigError("education probabilities must be 12 values summing to 1");

    auto eng = make_engine(spec.seed, {0xd6bULL});
    const int n = spec.n;
    const Eigen::VectorXd u1 = uniform01(eng, n);       // x1
    const Eigen::VectorXd u2 = uniform01(eng, n);       // education level
    const Eigen::VectorXd noise = standard_normal(eng, n);
    const Eigen::VectorXd u3 = uniform01(eng, n);       // treatment draw

    Eigen::VectorXd cum(kEduLevels);
    double acc = 0.0;
    for (int i = 0; i < kEduLevels; ++i) {
        acc += spec.edu_probs[i];
        cum[i] = acc;
    }

    ObservationTable table;
    table.y.resize(n);
    table.x.resize(n, 2);
    Eigen::VectorXd a(n);
    for (int i = 0; i < n; ++i) {
        const double x1 = u1[i];
        int level = 0;
        while (level < kEduLevels - 1 && u2[i] > cum[level]) ++level;
        const double x2 = x2_of_level(level);
        const double treat_pm1 = u3[i] < spec.propensity(x1, x2) ? 1.0 : -1.0;
        table.x(i, 0) = x1;
        table.x(i, 1) = x2;
        table.y[i] = treat_pm1 * spec.delta(x1, x2) + spec.baseline(x1, x2) + noise[i];
        a[i] = (treat_pm1 + 1.0) / 2.0;
    }
    table.a = a;
    return table;
}

// With A in {-1,1} and a = (A+1)/2, the true nuisance components are
//   mu1(x) = E[Y | A = 1, x] = Delta + S,  mu0(x) = E[Y | A = -1, x] = S - Delta,
// so conditional on x the AIPW weights are mixtures:
//   given A =  1: psi1 = mu1 + u/pi       (u ~ N(0,1)),  psi0 = mu0;
//   given A = -1: psi1 = mu1,             psi0 = mu0 + u/(1-pi).
// C1 = E[psi1^- + psi0^+ | x] and C0 = E[psi1^+ + psi0^- | x] follow from the
// normal positive-part moments; C0 - C1 = mu1 - mu0 = 2 Delta(x).
double oracle_c1(const DgpSpec& spec, double x1, double x2) {
    const double d = spec.delta(x1, x2), s = spec.baseline(x1, x2), pi = spec.propensity(x1, x2);
    const double mu1 = d + s, mu0 = s - d;
    const double psi1_neg = pi * neg_part_mean(mu1, 1.0 / pi) + (1.0 - pi) * std::max(-mu1, 0.0);
    const double psi0_pos =
        pi * std::max(mu0, 0.0) + (1.0 - pi) * pos_part_mean(mu0, 1.0 / (1.0 - pi));
    return psi1_neg + psi0_pos;
}

double oracle_c0(const DgpSpec& spec, double x1, double x2) {
    const double d = spec.delta(x1, x2), s = spec.baseline(x1, x2), pi = spec.propensity(x1, x2);
    const double mu1 = d + s, mu0 = s - d;
    const double psi1_pos = pi * pos_part_mean(mu1, 1.0 / pi) + (1.0 - pi) * std::max(mu1, 0.0);
    const double psi0_neg =
        pi * std::max(-mu0, 0.0) + (1.0 - pi) * neg_part_mean(mu0, 1.0 / (1.0 - pi));
    return psi1_pos + psi0_neg;
}

double oracle_g_star(const DgpSpec& spec, LossKind loss, double x1, double x2) {
    return SurrogateLoss(loss).pointwise_argmin(oracle_c1(spec, x1, x2),
                                                oracle_c0(spec, x1, x2));
}

int oracle_sign(const DgpSpec& spec, double x1, double x2) {
    const double d = spec.delta(x1, x2);
    return d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
}

double oracle_policy_value(const DgpSpec& spec,
                           const std::function<int(double, double)>& sign_policy, long points) {
    return oracle::mixed_quadrature(
        [&](double x1, int level) {
            const double x2 = x2_of_level(level);
            const double d = spec.delta(x1, x2), s = spec.baseline(x1, x2);
            return sign_policy(x1, x2) >= 0 ? d + s : s - d;
        },
        spec.edu_probs, points);
}

double oracle_v0(const DgpSpec& spec, long points) {
    return oracle::mixed_quadrature(
        [&](double x1, int level) {
            const double x2 = x2_of_level(level);
            return spec.baseline(x1, x2) + std::abs(spec.delta(x1, x2));
        },
        spec.edu_probs, points);
}

PipelineConfig simulation_pipeline_config(LossKind loss, int sieve_k, int m,
                                          const NuisanceConfig& nuisance, std::uint64_t seed) {
    PipelineConfig cfg;
    cfg.problem = ProblemKind::welfare;
    cfg.loss = loss;
    cfg.sieve_k = sieve_k;
    cfg.m = m;
    cfg.nuisance = nuisance;
    cfg.seed = seed;
    return cfg;
}

SizeCell run_size_experiment(const SizeConfig& config) {
    if (config.panel != 1 && config.panel != 2) throw ConfigError("panel must be 1 or 2");
    const double local = 1.0 / std::sqrt(static_cast<double>(config.n));
    const double sign = config.panel == 1 ? -1.0 : 1.0;

    const Eigen::VectorXd fixed = (Eigen::VectorXd(2) << 0.0, 10.0 / 18.0).finished();
    const EvalGrid grid = EvalGrid::line(2, 0, 0.05, 0.95, config.grid_points, fixed);
    const BandSide side = config.panel == 1 ? BandSide::lower : BandSide::upper;
    const UniformNull null =
        config.panel == 1 ? UniformNull::all_leq_zero : UniformNull::all_geq_zero;

    std::vector<char> rejected(config.replications, 0);
    parallel_for(config.replications, config.threads, [&](int rep) {
        DgpSpec dgp;
        dgp.gamma = Eigen::Vector3d(0.0, sign * local, sign * local);
        dgp.n = config.n;
        dgp.seed = mix_seed(config.seed, {0xd474ULL, static_cast<std::uint64_t>(rep)});
        const ObservationTable table = draw_dataset(dgp);

        const PipelineConfig pcfg = simulation_pipeline_config(
            config.loss, config.sieve_k, config.m, config.nuisance,
            mix_seed(config.seed, {0x9e99ULL, static_cast<std::uint64_t>(rep)}));
        const PolicyPipeline run = fit_policy_pipeline(table, pcfg);

        const PolicyBand band = build_band(
            run.model, run.basis_rows, run.weights_fullsample.psi_plus,
            run.weights_fullsample.psi_minus, grid, config.alpha, config.bootstrap_draws,
            mix_seed(config.seed, {0xba9dULL, static_cast<std::uint64_t>(rep)}), side);
        rejected[rep] = uniform_sign_test(band, null).reject ? 1 : 0;
    });

    SizeCell cell;
    cell.config = config;
    for (char r : rejected) cell.rejections += r;
    cell.nonrejection_rate =
        1.0 - static_cast<double>(cell.rejections) / static_cast<double>(config.replications);
    return cell;
}

std::vector<RejectionRow> run_rejection_experiment(const RejectionConfig& config) {
    const int n_bench = static_cast<int>(config.benchmarks.size());
    if (n_bench == 0) throw ConfigError("rejection experiment needs at least one benchmark");

    // flags[rep][bench][side]
    std::vector<std::array<std::array<char, 3>, 8>> flags(config.replications);
    if (n_bench > 8) throw ConfigError("too many benchmarks");

    parallel_for(config.replications, config.threads, [&](int rep) {
        DgpSpec dgp;
        dgp.gamma = config.gamma;
        dgp.n = config.n;
        dgp.seed = mix_seed(config.seed, {0xd474ULL, static_cast<std::uint64_t>(rep)});
        const ObservationTable table = draw_dataset(dgp);

        const PipelineConfig pcfg = simulation_pipeline_config(
            config.loss, config.sieve_k, config.m, config.nuisance,
            mix_seed(config.seed, {0x9e99ULL, static_cast<std::uint64_t>(rep)}));
        const PolicyPipeline run = fit_policy_pipeline(table, pcfg);
        const Eigen::VectorXd g_rows = run.g_hat_sample();

        for (int b = 0; b < n_bench; ++b) {
            const BenchmarkPolicy bench = BenchmarkPolicy::parse(
                config.benchmarks[b],
                mix_seed(config.seed, {0xbe9cULL, static_cast<std::uint64_t>(rep),
                                       static_cast<std::uint64_t>(b)}),
                config.n);
            const BenchmarkTest test = benchmark_test(
                g_rows, bench.evaluate_rows(table.x), run.weights_crossfit.psi1,
                run.weights_crossfit.psi0, config.bootstrap_draws,
                mix_seed(config.seed, {0x7a1eULL, static_cast<std::uint64_t>(rep),
                                       static_cast<std::uint64_t>(b)}),
                bench.label());
            flags[rep][b][0] = test.p_two_sided <= config.alpha ? 1 : 0;
            flags[rep][b][1] = test.p_left <= config.alpha ? 1 : 0;
            flags[rep][b][2] = test.p_right <= config.alpha ? 1 : 0;
        }
    });

    std::vector<RejectionRow> rows(n_bench);
    for (int b = 0; b < n_bench; ++b) {
        rows[b].benchmark = config.benchmarks[b];
        long two = 0, left = 0, right = 0;
        for (int rep = 0; rep < config.replications; ++rep) {
            two += flags[rep][b][0];
            left += flags[rep][b][1];
            right += flags[rep][b][2];
        }
        const double s = static_cast<double>(config.replications);
        rows[b].reject_two_sided = two / s;
        rows[b].reject_left = left / s;
        rows[b].reject_right = right / s;
    }
    return rows;
}

NormalityResult run_normality_diagnostic(const NormalityConfig& config) {
    if (config.replications < 200)
        throw ConfigError("normality diagnostic needs at least 200 replications");

    constexpr int kRules = 4;
    std::vector<std::array<double, kRules>> values(config.replications);

    parallel_for(config.replications, config.threads, [&](int rep) {
        DgpSpec dgp;
        dgp.gamma = config.gamma;
        dgp.n = config.n;
        dgp.seed = mix_seed(config.seed, {0xd474ULL, static_cast<std::uint64_t>(rep)});
        const ObservationTable table = draw_dataset(dgp);

        const PipelineConfig pcfg = simulation_pipeline_config(
            config.loss, config.sieve_k, config.m, config.nuisance,
            mix_seed(config.seed, {0x9e99ULL, static_cast<std::uint64_t>(rep)}));
        const PolicyPipeline run = fit_policy_pipeline(table, pcfg);
        const Eigen::VectorXd& psi1 = run.weights_crossfit.psi1;
        const Eigen::VectorXd& psi0 = run.weights_crossfit.psi0;

        Eigen::VectorXd g_oracle(config.n);
        for (int i = 0; i < config.n; ++i)
            g_oracle[i] = oracle_sign(dgp, table.x(i, 0), table.x(i, 1)) >= 0 ? 1.0 : -1.0;
        const BenchmarkPolicy random = BenchmarkPolicy::random(
            0.5, mix_seed(config.seed, {0xbe9cULL, static_cast<std::uint64_t>(rep)}), config.n);

        values[rep][0] = value_estimate(run.g_hat_sample(), psi1, psi0);
        values[rep][1] = value_estimate(g_oracle, psi1, psi0);
        values[rep][2] = value_estimate(Eigen::VectorXd::Ones(config.n), psi1, psi0);
        values[rep][3] = value_estimate(random.evaluate_rows(table.x), psi1, psi0);
    });

    const char* names[kRules] = {"est_optimal", "oracle_optimal", "everyone", "random"};
    NormalityResult result;
    for (int r = 0; r < kRules; ++r) {
        NormalityRule rule;
        rule.name = names[r];
        rule.values.resize(config.replications);
        for (int rep = 0; rep < config.replications; ++rep) rule.values[rep] = values[rep][r];
        double mean = 0.0;
        for (double v : rule.values) mean += v;
        mean /= config.replications;
        double var = 0.0;
        for (double v : rule.values) var += (v - mean) * (v - mean);
        var /= (config.replications - 1);
        rule.mean = mean;
        rule.stddev = std::sqrt(var);
        rule.standardized.resize(config.replications);
        for (int rep = 0; rep < config.replications; ++rep)
            rule.standardized[rep] = (rule.values[rep] - mean) / rule.stddev;
        rule.ks_stat = ks_statistic_normal(rule.standardized);
        rule.ks_pvalue = ks_pvalue(rule.ks_stat, config.replications);
        result.rules.push_back(std::move(rule));
    }
    result.ks_est_vs_oracle =
        two_sample_ks(result.rules[0].standardized, result.rules[1].standardized);
    return result;
}

double ks_statistic_normal(std::span<const double> sample) {
    if (sample.empty()) throw DataError("empty sample in KS statistic");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (size_t i = 0; i < sorted.size(); ++i) {
        const double f = normal_cdf(sorted[i]);
        d = std::max(d, (i + 1) / n - f);
        d = std::max(d, f - i / n);
    }
    return d;
}

double two_sample_ks(std::span<const double> a, std::span<const double> b) {
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    double d = 0.0;
    size_t i = 0, j = 0;
    while (i < sa.size() && j < sb.size()) {
        // advance both sides past ties before comparing the empirical CDFs
        const double v = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] == v) ++i;
        while (j < sb.size() && sb[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / sa.size() -
                                 static_cast<double>(j) / sb.size()));
    }
    return d;
}

double ks_pvalue(double stat, int n) {
    const double rn = std::sqrt(static_cast<double>(n));
    const double lambda = (rn + 0.12 + 0.11 / rn) * stat;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace polinf
