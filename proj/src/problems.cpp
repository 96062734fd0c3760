#include "polinf/problems.hpp"

#include <cmath>

#include "polinf/errors.hpp"

namespace polinf {

ProblemKind problem_kind_from_string(std::string_view name) {
    if (name == "max-score" || name == "max_score") return ProblemKind::max_score;
    if (name == "utility") return ProblemKind::utility;
    if (name == "welfare") return ProblemKind::welfare;
    throw ConfigError("unknown problem kind: '" + std::string(name) +
                      "' (expected max-score|utility|welfare)");
}

std::string to_string(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::max_score: return "max-score";
        case ProblemKind::utility: return "utility";
        case ProblemKind::welfare: return "welfare";
    }
    return "?";
}

bool problem_requires_treatment(ProblemKind kind) { return kind == ProblemKind::welfare; }

void ObservationTable::validate(ProblemKind kind) const {
    if (n() < 2) throw DataError("need at least 2 observations");
    if (x.rows() != n()) throw DataError("covariate row count does not match outcomes");
    if (!y.allFinite() || !x.allFinite()) throw DataError("non-finite entries in data");
    if (problem_requires_treatment(kind)) {
        if (!a.has_value()) throw DataError("problem requires a treatment column 'a'");
        if (a->size() != n()) throw DataError("treatment column length mismatch");
        for (int i = 0; i < n(); ++i) {
            const double v = (*a)[i];
            if (v != 0.0 && v != 1.0) throw DataError("treatment must be coded {0,1} internally");
        }
    }
}

WeightedSample weights_max_score(const ObservationTable& table) {
    table.validate(ProblemKind::max_score);
    const int n = table.n();
    WeightedSample w;
    w.psi_plus.resize(n);
    w.psi_minus.resize(n);
    w.psi1.resize(n);
    w.psi0.resize(n);
    for (int i = 0; i < n; ++i) {
        const double y = table.y[i];
        if (y != 0.0 && y != 1.0)
            throw DataError("max-score outcome must be in {0,1} (row " + std::to_string(i) + ")");
        w.psi_plus[i] = 1.0 - y;
        w.psi_minus[i] = y;
        w.psi1[i] = y;
        w.psi0[i] = 1.0 - y;
    }
    return w;
}

WeightedSample weights_utility(const ObservationTable& table,
                               const std::function<double(const Eigen::VectorXd&)>& b,
                               const std::function<double(const Eigen::VectorXd&)>& c) {
    table.validate(ProblemKind::utility);
    const int n = table.n();
    WeightedSample w;
    w.psi_plus.resize(n);
    w.psi_minus.resize(n);
    w.psi1.resize(n);
    w.psi0.resize(n);
    for (int i = 0; i < n; ++i) {
        const double y = table.y[i];
        if (y != -1.0 && y != 1.0)
            throw DataError("utility outcome must be in {-1,1} (row " + std::to_string(i) + ")");
        const Eigen::VectorXd xi = table.x.row(i).transpose();
        const double bi = b(xi);
        const double ci = c(xi);
        if (bi < 0.0) throw DataError("utility gain scale b(x) must be nonnegative");
        if (!(ci > 0.0 && ci < 1.0)) throw DataError("utility threshold c(x) must lie in (0,1)");
        const double u = bi * (y + 1.0 - 2.0 * ci);
        w.psi1[i] = u;
        w.psi0[i] = -u;
        w.psi_plus[i] = 2.0 * std::max(-u, 0.0);
        w.psi_minus[i] = 2.0 * std::max(u, 0.0);
    }
    return w;
}

WeightedSample weights_aipw(const ObservationTable& table,
                            const Eigen::VectorXd& mu1_hat,
                            const Eigen::VectorXd& mu0_hat,
                            const Eigen::VectorXd& pi_hat) {
    table.validate(ProblemKind::welfare);
    const int n = table.n();
    if (mu1_hat.size() != n || mu0_hat.size() != n || pi_hat.size() != n)
        throw DataError("nuisance prediction length mismatch");
    WeightedSample w;
    w.psi_plus.resize(n);
    w.psi_minus.resize(n);
    w.psi1.resize(n);
    w.psi0.resize(n);
    for (int i = 0; i < n; ++i) {
        const double ai = (*table.a)[i];
        const double yi = table.y[i];
        const double pi = std::clamp(pi_hat[i], kPropensityFloor, 1.0 - kPropensityFloor);
        const double psi1 = ai * (yi - mu1_hat[i]) / pi + mu1_hat[i];
        const double psi0 = (1.0 - ai) * (yi - mu0_hat[i]) / (1.0 - pi) + mu0_hat[i];
        w.psi1[i] = psi1;
        w.psi0[i] = psi0;
        w.psi_plus[i] = std::max(-psi1, 0.0) + std::max(psi0, 0.0);
        w.psi_minus[i] = std::max(psi1, 0.0) + std::max(-psi0, 0.0);
    }
    return w;
}

WeightedSample weights_aipw(const ObservationTable& table,
                            const std::function<double(const Eigen::VectorXd&)>& mu1,
                            const std::function<double(const Eigen::VectorXd&)>& mu0,
                            const std::function<double(const Eigen::VectorXd&)>& pi) {
    const int n = table.n();
    Eigen::VectorXd m1(n), m0(n), p(n);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd xi = table.x.row(i).transpose();
        m1[i] = mu1(xi);
        m0[i] = mu0(xi);
        p[i] = pi(xi);
    }
    return weights_aipw(table, m1, m0, p);
}

}  // namespace polinf
