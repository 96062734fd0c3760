#include "polinf/policy_inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "polinf/errors.hpp"
#include "polinf/rng.hpp"

namespace polinf {

void EvalGrid::validate() const {
    if (points.rows() == 0) throw ConfigError("evaluation grid is empty");
    if (!points.allFinite()) throw ConfigError("evaluation grid has non-finite points");
    if ((points.array() < 0.0).any() || (points.array() > 1.0).any())
        throw ConfigError("evaluation grid must lie in the unit cube");
}

EvalGrid EvalGrid::line(int dim, int free_axis, double lo, double hi, int count,
                        const Eigen::VectorXd& fixed) {
    if (free_axis < 0 || free_axis >= dim) throw ConfigError("grid axis out of range");
    if (count < 1) throw ConfigError("grid needs at least one point");
    EvalGrid g;
    g.points.resize(count, dim);
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd x = fixed;
        x[free_axis] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
        g.points.row(i) = x.transpose();
    }
    g.validate();
    return g;
}

namespace {

struct AxisSpec {
    double lo = 0.0, hi = 1.0;
    int count = 1;
};

AxisSpec parse_axis(std::string_view body, int default_count) {
    AxisSpec a;
    const auto c1 = body.find(':');
    if (c1 == std::string_view::npos) {
        a.lo = a.hi = std::stod(std::string(body));
        a.count = 1;
        return a;
    }
    const auto c2 = body.find(':', c1 + 1);
    a.lo = std::stod(std::string(body.substr(0, c1)));
    if (c2 == std::string_view::npos) {
        a.hi = std::stod(std::string(body.substr(c1 + 1)));
        a.count = default_count;
    } else {
        a.hi = std::stod(std::string(body.substr(c1 + 1, c2 - c1 - 1)));
        a.count = std::stoi(std::string(body.substr(c2 + 1)));
    }
    if (a.count < 1) throw ConfigError("grid axis needs a positive count");
    if (a.hi < a.lo) throw ConfigError("grid axis has hi < lo");
    return a;
}

}  // namespace

EvalGrid EvalGrid::parse(std::string_view spec, int dim, int default_count) {
    std::vector<AxisSpec> axes(dim);
    for (auto& a : axes) a = AxisSpec{0.0, 1.0, default_count};

    if (!spec.empty()) {
        size_t pos = 0;
        while (pos < spec.size()) {
            auto comma = spec.find(',', pos);
            if (comma == std::string_view::npos) comma = spec.size();
            const std::string_view part = spec.substr(pos, comma - pos);
            const auto eq = part.find('=');
            if (eq == std::string_view::npos || part.substr(0, 1) != "x")
                throw ConfigError("bad grid spec segment: '" + std::string(part) + "'");
            int axis = 0;
            try {
                axis = std::stoi(std::string(part.substr(1, eq - 1))) - 1;
            } catch (const std::exception&) {
                throw ConfigError("bad grid axis name in '" + std::string(part) + "'");
            }
            if (axis < 0 || axis >= dim)
                throw ConfigError("grid axis out of range in '" + std::string(part) + "'");
            try {
                axes[axis] = parse_axis(part.substr(eq + 1), default_count);
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception&) {
                throw ConfigError("bad grid range in '" + std::string(part) + "'");
            }
            pos = comma + 1;
        }
    }

    long total = 1;
    for (const auto& a : axes) {
        total *= a.count;
        if (total > 2'000'000) throw ConfigError("grid too large");
    }

    EvalGrid g;
    g.points.resize(total, dim);
    for (long idx = 0; idx < total; ++idx) {
        long rem = idx;
        for (int j = dim - 1; j >= 0; --j) {
            const auto& a = axes[j];
            const int k = static_cast<int>(rem % a.count);
            rem /= a.count;
            g.points(idx, j) = a.count == 1 ? a.lo : a.lo + (a.hi - a.lo) * k / (a.count - 1);
        }
    }
    g.validate();
    return g;
}

BandSide band_side_from_string(std::string_view name) {
    if (name == "two" || name == "two_sided" || name == "two-sided") return BandSide::two_sided;
    if (name == "lower") return BandSide::lower;
    if (name == "upper") return BandSide::upper;
    throw ConfigError("unknown band side: '" + std::string(name) + "' (expected two|lower|upper)");
}

std::string to_string(BandSide side) {
    switch (side) {
        case BandSide::two_sided: return "two_sided";
        case BandSide::lower: return "lower";
        case BandSide::upper: return "upper";
    }
    return "?";
}

ScoreBootstrap::ScoreBootstrap(const SieveModel& model, const Eigen::MatrixXd& sample_basis_rows,
                               const Eigen::VectorXd& psi_plus, const Eigen::VectorXd& psi_minus,
                               const Eigen::MatrixXd& grid_basis_rows) {
    if (model.Q.size() == 0) throw NumericError("sandwich matrices not computed");
    const Eigen::VectorXd scores = score_values(model, sample_basis_rows, psi_plus, psi_minus);
    score_basis_ = sample_basis_rows.array().colwise() * scores.array();

    const Eigen::LDLT<Eigen::MatrixXd> ldlt(model.Q);
    if (ldlt.info() != Eigen::Success) throw NumericError("singular design: Q not factorizable");
    grid_proj_ = ldlt.solve(grid_basis_rows.transpose()).transpose();

    sigma_ = sigma_hat_rows(model, grid_basis_rows);
    for (Eigen::Index i = 0; i < sigma_.size(); ++i)
        if (!(sigma_[i] > 0.0))
            throw NumericError("degenerate variance: sigma(x) = 0 on the evaluation grid");
}

Eigen::VectorXd ScoreBootstrap::t_draw(const Eigen::VectorXd& omega) const {
    if (omega.size() != score_basis_.rows())
        throw DataError("multiplier vector length mismatch");
    // sqrt(n) * mean_i omega_i score_i p_i = (score_basis' omega) / sqrt(n)
    const Eigen::VectorXd gn =
        score_basis_.transpose() * omega / std::sqrt(static_cast<double>(omega.size()));
    return (grid_proj_ * gn).cwiseQuotient(sigma_);
}

double type1_quantile(std::span<const double> values, double q) {
    if (values.empty()) throw NumericError("quantile of empty sample");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const long b = static_cast<long>(sorted.size());
    long rank = static_cast<long>(std::ceil(q * static_cast<double>(b)));
    rank = std::clamp(rank, 1L, b);
    return sorted[rank - 1];
}

double critical_value(std::span<const double> draws, double alpha, BandSide side) {
    if (draws.empty()) throw NumericError("no bootstrap draws for critical value");
    switch (side) {
        case BandSide::two_sided: return type1_quantile(draws, 1.0 - alpha);
        case BandSide::lower: return type1_quantile(draws, 1.0 - alpha);
        case BandSide::upper: return type1_quantile(draws, alpha);
    }
    throw NumericError("unreachable band side");
}

namespace {

// Inverse standard normal CDF by bisection on erfc; only used for the
// pointwise diagnostic band.
double normal_quantile(double p) {
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
        (cdf < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

PolicyBand build_band(const SieveModel& model, const Eigen::MatrixXd& sample_basis_rows,
                      const Eigen::VectorXd& psi_plus, const Eigen::VectorXd& psi_minus,
                      const EvalGrid& grid, double alpha, int n_draws, std::uint64_t seed,
                      BandSide side) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    if (n_draws < 100) throw ConfigError("need at least 100 bootstrap draws");
    grid.validate();

    const SieveBasis basis(model.spec);
    const Eigen::MatrixXd grid_rows = basis.eval_rows(grid.points);
    const ScoreBootstrap boot(model, sample_basis_rows, psi_plus, psi_minus, grid_rows);

    const int n = boot.n_obs();
    std::vector<double> stats(n_draws);
    for (int b = 0; b < n_draws; ++b) {
        auto eng = make_engine(seed, {0xb00737ULL, static_cast<std::uint64_t>(b)});
        const Eigen::VectorXd omega = standard_normal(eng, n);
        const Eigen::VectorXd t = boot.t_draw(omega);
        switch (side) {
            case BandSide::two_sided: stats[b] = t.cwiseAbs().maxCoeff(); break;
            case BandSide::lower: stats[b] = t.maxCoeff(); break;
            case BandSide::upper: stats[b] = t.minCoeff(); break;
        }
    }
    const double cv = critical_value(stats, alpha, side);

    PolicyBand band;
    band.grid = grid;
    band.g_hat = model.g_hat_rows(grid_rows);
    band.sigma_hat = boot.sigma();
    band.critical_value = cv;
    band.side = side;
    band.alpha = alpha;
    band.n_draws = n_draws;
    band.n_obs = n;
    band.seed = seed;

    // sigma estimates the variance of the sqrt(n)-scaled estimation error, so
    // band half-widths carry a 1/sqrt(n) factor.
    const Eigen::VectorXd se = band.sigma_hat / std::sqrt(static_cast<double>(n));
    const double inf = std::numeric_limits<double>::infinity();
    switch (side) {
        case BandSide::two_sided:
            band.lo = band.g_hat - cv * se;
            band.hi = band.g_hat + cv * se;
            break;
        case BandSide::lower:
            band.lo = band.g_hat - cv * se;
            band.hi = Eigen::VectorXd::Constant(grid.size(), inf);
            break;
        case BandSide::upper:
            band.hi = band.g_hat - cv * se;
            band.lo = Eigen::VectorXd::Constant(grid.size(), -inf);
            break;
    }

    const double z = side == BandSide::two_sided ? normal_quantile(1.0 - alpha / 2.0)
                                                 : normal_quantile(1.0 - alpha);
    band.lo_pointwise = band.g_hat - z * se;
    band.hi_pointwise = band.g_hat + z * se;
    return band;
}

SignTestResult uniform_sign_test(const PolicyBand& band, UniformNull null) {
    if (null == UniformNull::all_leq_zero && band.side != BandSide::lower)
        throw ConfigError("H0: g <= 0 requires a lower one-sided band");
    if (null == UniformNull::all_geq_zero && band.side != BandSide::upper)
        throw ConfigError("H0: g >= 0 requires an upper one-sided band");

    SignTestResult result;
    for (int i = 0; i < band.grid.size(); ++i) {
        const bool violates =
            null == UniformNull::all_leq_zero ? band.lo[i] > 0.0 : band.hi[i] < 0.0;
        if (violates) result.witness_indices.push_back(i);
    }
    result.reject = !result.witness_indices.empty();
    return result;
}

nlohmann::json PolicyBand::to_json() const {
    nlohmann::json points = nlohmann::json::array();
    for (int i = 0; i < grid.size(); ++i) {
        nlohmann::json x = nlohmann::json::array();
        for (int j = 0; j < grid.dim(); ++j) x.push_back(grid.points(i, j));
        points.push_back({{"x", x},
                          {"g_hat", g_hat[i]},
                          {"sigma_hat", sigma_hat[i]},
                          {"lo", std::isfinite(lo[i]) ? nlohmann::json(lo[i]) : nlohmann::json()},
                          {"hi", std::isfinite(hi[i]) ? nlohmann::json(hi[i]) : nlohmann::json()},
                          {"lo_pointwise", lo_pointwise[i]},
                          {"hi_pointwise", hi_pointwise[i]}});
    }
    return nlohmann::json{{"points", points},
                          {"cv", critical_value},
                          {"side", to_string(side)},
                          {"alpha", alpha},
                          {"B", n_draws},
                          {"n", n_obs},
                          {"seed", seed}};
}

}  // namespace polinf
