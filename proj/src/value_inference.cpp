#include "polinf/value_inference.hpp"

#include <cmath>

#include "polinf/errors.hpp"
#include "polinf/policy_inference.hpp"
#include "polinf/rng.hpp"

namespace polinf {

BenchmarkPolicy BenchmarkPolicy::everyone() {
    BenchmarkPolicy b;
    b.kind_ = Kind::treat_everyone;
    b.label_ = "everyone";
    return b;
}

BenchmarkPolicy BenchmarkPolicy::no_one() {
    BenchmarkPolicy b;
    b.kind_ = Kind::treat_no_one;
    b.label_ = "none";
    return b;
}

BenchmarkPolicy BenchmarkPolicy::random(double p, std::uint64_t seed, int n_rows) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("random policy probability must be in [0,1]");
    BenchmarkPolicy b;
    b.kind_ = Kind::random;
    b.label_ = "random(p=" + std::to_string(p) + ")";
    b.p_ = p;
    b.seed_ = seed;
    auto eng = make_engine(seed, {0xda7aULL});
    const Eigen::VectorXd u = uniform01(eng, n_rows);
    b.frozen_.resize(n_rows);
    for (int i = 0; i < n_rows; ++i) b.frozen_[i] = u[i] < p ? 1.0 : -1.0;
    return b;
}

BenchmarkPolicy BenchmarkPolicy::custom(std::function<double(const Eigen::VectorXd&)> rule,
                                        std::string label) {
    BenchmarkPolicy b;
    b.kind_ = Kind::custom;
    b.label_ = std::move(label);
    b.rule_ = std::move(rule);
    return b;
}

BenchmarkPolicy BenchmarkPolicy::parse(std::string_view spec, std::uint64_t seed, int n_rows) {
    if (spec == "everyone") return everyone();
    if (spec == "none") return no_one();
    if (spec.rfind("random", 0) == 0) {
        double p = 0.5;
        const auto eq = spec.find("p=");
        if (eq != std::string_view::npos) {
            try {
                p = std::stod(std::string(spec.substr(eq + 2)));
            } catch (const std::exception&) {
                throw ConfigError("bad random policy spec: '" + std::string(spec) + "'");
            }
        }
        return random(p, seed, n_rows);
    }
    throw ConfigError("unknown benchmark policy: '" + std::string(spec) +
                      "' (expected everyone|none|random[:p=...])");
}

Eigen::VectorXd BenchmarkPolicy::evaluate_rows(const Eigen::MatrixXd& x) const {
    const int n = static_cast<int>(x.rows());
    switch (kind_) {
        case Kind::treat_everyone: return Eigen::VectorXd::Ones(n);
        case Kind::treat_no_one: return Eigen::VectorXd::Constant(n, -1.0);
        case Kind::random:
            if (frozen_.size() != n)
                throw DataError("random benchmark policy frozen for a different sample size");
            return frozen_;
        case Kind::custom: {
            Eigen::VectorXd g(n);
            for (int i = 0; i < n; ++i) g[i] = rule_(x.row(i).transpose());
            return g;
        }
    }
    throw NumericError("unreachable benchmark kind");
}

double value_estimate(const Eigen::VectorXd& g_rows, const Eigen::VectorXd& psi1,
                      const Eigen::VectorXd& psi0) {
    const Eigen::Index n = g_rows.size();
    if (psi1.size() != n || psi0.size() != n) throw DataError("value weight length mismatch");
    if (n == 0) throw DataError("empty sample in value estimate");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) acc += g_rows[i] >= 0.0 ? psi1[i] : psi0[i];
    return acc / static_cast<double>(n);
}

Eigen::VectorXd scores_sL(const Eigen::VectorXd& g_rows, const Eigen::VectorXd& psi1,
                          const Eigen::VectorXd& psi0, double v_hat) {
    Eigen::VectorXd s(g_rows.size());
    for (Eigen::Index i = 0; i < g_rows.size(); ++i)
        s[i] = (g_rows[i] >= 0.0 ? psi1[i] : psi0[i]) - v_hat;
    return s;
}

double bootstrap_value_draw(const Eigen::VectorXd& scores, const Eigen::VectorXd& delta) {
    if (scores.size() != delta.size()) throw DataError("multiplier length mismatch");
    return scores.dot(delta) / std::sqrt(static_cast<double>(scores.size()));
}

namespace {

std::vector<double> draw_z_tilde(const Eigen::VectorXd& scores, int n_draws, std::uint64_t seed) {
    std::vector<double> z(n_draws);
    for (int b = 0; b < n_draws; ++b) {
        auto eng = make_engine(seed, {0x76a1ULL, static_cast<std::uint64_t>(b)});
        const Eigen::VectorXd delta = standard_normal(eng, scores.size());
        z[b] = bootstrap_value_draw(scores, delta);
    }
    return z;
}

}  // namespace

ValueReport value_ci(const Eigen::VectorXd& g_rows, const Eigen::VectorXd& psi1,
                     const Eigen::VectorXd& psi0, double alpha, int n_draws,
                     std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    if (n_draws < 100) throw ConfigError("need at least 100 bootstrap draws");

    const int n = static_cast<int>(g_rows.size());
    ValueReport report;
    report.v_hat = value_estimate(g_rows, psi1, psi0);
    report.alpha = alpha;
    report.n_draws = n_draws;
    report.n_obs = n;
    report.seed = seed;

    const Eigen::VectorXd scores = scores_sL(g_rows, psi1, psi0, report.v_hat);
    const std::vector<double> z = draw_z_tilde(scores, n_draws, seed);

    double mean = 0.0, m2 = 0.0;
    for (double v : z) mean += v;
    mean /= n_draws;
    for (double v : z) m2 += (v - mean) * (v - mean);
    report.sigma_v = n_draws > 1 ? std::sqrt(m2 / (n_draws - 1)) : 0.0;

    std::vector<double> abs_z(z.size());
    for (size_t i = 0; i < z.size(); ++i) abs_z[i] = std::abs(z[i]);
    const double q_two = type1_quantile(abs_z, 1.0 - alpha);
    const double q_one = type1_quantile(z, 1.0 - alpha);
    const double root_n = std::sqrt(static_cast<double>(n));
    report.ci_lo = report.v_hat - q_two / root_n;
    report.ci_hi = report.v_hat + q_two / root_n;
    report.one_sided_lower = report.v_hat - q_one / root_n;
    return report;
}

BenchmarkTest benchmark_test(const Eigen::VectorXd& g_rows, const Eigen::VectorXd& g_dagger_rows,
                             const Eigen::VectorXd& psi1, const Eigen::VectorXd& psi0,
                             int n_draws, std::uint64_t seed, const std::string& label) {
    if (n_draws < 100) throw ConfigError("need at least 100 bootstrap draws");
    if (g_dagger_rows.size() != g_rows.size()) throw DataError("benchmark length mismatch");

    BenchmarkTest test;
    test.label = label;
    test.v_hat = value_estimate(g_rows, psi1, psi0);
    test.v_dagger = value_estimate(g_dagger_rows, psi1, psi0);
    const int n = static_cast<int>(g_rows.size());
    const double gap = test.v_hat - test.v_dagger;
    test.t_stat = std::sqrt(static_cast<double>(n)) * gap;

    // Difference score, centered so its sample mean is exactly zero.
    Eigen::VectorXd scores(n);
    for (int i = 0; i < n; ++i) {
        const double ind = (g_rows[i] >= 0.0 ? 1.0 : 0.0) - (g_dagger_rows[i] >= 0.0 ? 1.0 : 0.0);
        scores[i] = (psi1[i] - psi0[i]) * ind - gap;
    }

    const std::vector<double> z = draw_z_tilde(scores, n_draws, seed);
    int n_two = 0, n_left = 0, n_right = 0;
    for (double v : z) {
        if (std::abs(v) >= std::abs(test.t_stat)) ++n_two;
        if (v <= test.t_stat) ++n_left;
        if (v >= test.t_stat) ++n_right;
    }
    test.p_two_sided = static_cast<double>(n_two) / n_draws;
    test.p_left = static_cast<double>(n_left) / n_draws;
    test.p_right = static_cast<double>(n_right) / n_draws;
    return test;
}

nlohmann::json BenchmarkTest::to_json() const {
    return nlohmann::json{{"benchmark", label},
                          {"v_hat", v_hat},
                          {"v_dagger", v_dagger},
                          {"t_stat", t_stat},
                          {"p_two_sided", p_two_sided},
                          {"p_left", p_left},
                          {"p_right", p_right}};
}

nlohmann::json ValueReport::to_json() const {
    nlohmann::json benches = nlohmann::json::array();
    for (const auto& b : benchmarks) benches.push_back(b.to_json());
    return nlohmann::json{{"v_hat", v_hat},
                          {"sigma_v", sigma_v},
                          {"ci_lo", ci_lo},
                          {"ci_hi", ci_hi},
                          {"one_sided_lower", one_sided_lower},
                          {"alpha", alpha},
                          {"B", n_draws},
                          {"n", n_obs},
                          {"seed", seed},
                          {"benchmarks", benches}};
}

}  // namespace polinf
