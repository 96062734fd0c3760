#include "polinf/policy_fit.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "polinf/errors.hpp"

namespace polinf {

double SieveModel::g_hat(const Eigen::VectorXd& x) const {
    const SieveBasis basis(spec);
    return basis.eval(x).dot(beta_bar);
}

Eigen::VectorXd SieveModel::g_hat_rows(const Eigen::MatrixXd& basis_rows) const {
    return basis_rows * beta_bar;
}

namespace {

struct Objective {
    const Eigen::MatrixXd& p;
    const Eigen::VectorXd& wp;  // psi+
    const Eigen::VectorXd& wm;  // psi-
    const SurrogateLoss& loss;

    double value(const Eigen::VectorXd& beta) const {
        const Eigen::VectorXd g = p * beta;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < g.size(); ++i)
            acc += wp[i] * loss.value(-g[i]) + wm[i] * loss.value(g[i]);
        return acc / static_cast<double>(g.size());
    }

    void grad_hess(const Eigen::VectorXd& beta, Eigen::VectorXd& grad,
                   Eigen::MatrixXd& hess) const {
        const Eigen::Index n = p.rows(), k = p.cols();
        const Eigen::VectorXd g = p * beta;
        grad.setZero(k);
        hess.setZero(k, k);
        for (Eigen::Index i = 0; i < n; ++i) {
            const LossEval neg = loss.eval(-g[i]);
            const LossEval pos = loss.eval(g[i]);
            const double s = -wp[i] * neg.d1 + wm[i] * pos.d1;
            const double h = wp[i] * neg.d2 + wm[i] * pos.d2;
            grad.noalias() += s * p.row(i).transpose();
            hess.selfadjointView<Eigen::Lower>().rankUpdate(p.row(i).transpose(), h);
        }
        grad /= static_cast<double>(n);
        hess = hess.selfadjointView<Eigen::Lower>();
        hess /= static_cast<double>(n);
    }
};

}  // namespace

Eigen::VectorXd fit_fold(const Eigen::MatrixXd& basis_rows, const Eigen::VectorXd& psi_plus,
                         const Eigen::VectorXd& psi_minus, const SurrogateLoss& loss,
                         FitDiagnostics* diag) {
    const Eigen::Index n = basis_rows.rows(), k = basis_rows.cols();
    if (n == 0) throw DataError("empty fold in policy fit");
    if (psi_plus.size() != n || psi_minus.size() != n)
        throw DataError("weight length mismatch in policy fit");
    if ((psi_plus.array() < 0).any() || (psi_minus.array() < 0).any())
        throw NumericError("negative risk weights in policy fit");

    // The argmin is invariant to a common positive rescaling of the weights.
    // Normalizing by the mean weight mass makes the ridge and the stopping
    // rule scale-free, so rescaled inputs give the same iterates.
    const double mass = (psi_plus.sum() + psi_minus.sum()) / static_cast<double>(n);
    const double inv_mass = mass > 0.0 ? 1.0 / mass : 1.0;
    const Eigen::VectorXd wp_n = psi_plus * inv_mass;
    const Eigen::VectorXd wm_n = psi_minus * inv_mass;

    const Objective obj{basis_rows, wp_n, wm_n, loss};
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    double f = obj.value(beta);

    Eigen::VectorXd grad(k);
    Eigen::MatrixXd hess(k, k);
    const int max_iter = 200;
    int iter = 0;
    double grad_norm = 0.0;
    for (; iter < max_iter; ++iter) {
        obj.grad_hess(beta, grad, hess);
        grad_norm = grad.norm();
        if (grad_norm <= 1e-8 * (1.0 + beta.norm())) break;

        hess.diagonal().array() += 1e-10;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        if (ldlt.info() != Eigen::Success)
            throw NumericError("ill-conditioned Hessian in policy fit");
        const Eigen::VectorXd direction = ldlt.solve(-grad);
        const double slope = grad.dot(direction);
        if (!std::isfinite(slope) || slope >= 0.0)
            throw NumericError("non-descent Newton direction in policy fit");

        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h < 30; ++h) {
            const double f_new = obj.value(beta + t * direction);
            if (std::isfinite(f_new) && f_new <= f + 0.5 * t * slope + 1e-15 * (1.0 + std::abs(f))) {
                beta += t * direction;
                f = f_new;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) throw NumericError("line search failed in policy fit");
    }
    if (iter == max_iter) throw NumericError("policy fit did not converge in 200 iterations");

    if (diag) {
        diag->newton_iterations = iter;
        diag->grad_norm = grad_norm;
        diag->objective = f;
    }
    return beta;
}

SieveModel aggregate(const BasisSpec& spec, LossKind loss,
                     std::vector<Eigen::VectorXd> beta_per_fold,
                     std::vector<FitDiagnostics> diagnostics) {
    if (beta_per_fold.empty()) throw DataError("no fold estimates to aggregate");
    SieveModel model;
    model.spec = spec;
    model.loss = loss;
    model.beta_bar = Eigen::VectorXd::Zero(beta_per_fold.front().size());
    for (const auto& b : beta_per_fold) {
        if (b.size() != model.beta_bar.size()) throw DataError("fold coefficient size mismatch");
        model.beta_bar += b;
    }
    model.beta_bar /= static_cast<double>(beta_per_fold.size());
    model.beta_per_fold = std::move(beta_per_fold);
    model.diagnostics = std::move(diagnostics);
    return model;
}

Eigen::VectorXd score_values(const SieveModel& model, const Eigen::MatrixXd& basis_rows,
                             const Eigen::VectorXd& psi_plus, const Eigen::VectorXd& psi_minus) {
    const SurrogateLoss loss(model.loss);
    const Eigen::VectorXd g = model.g_hat_rows(basis_rows);
    Eigen::VectorXd s(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i)
        s[i] = -psi_plus[i] * loss.d1(-g[i]) + psi_minus[i] * loss.d1(g[i]);
    return s;
}

void compute_sandwich(SieveModel& model, const Eigen::MatrixXd& basis_rows,
                      const Eigen::VectorXd& psi_plus, const Eigen::VectorXd& psi_minus) {
    const Eigen::Index n = basis_rows.rows(), k = basis_rows.cols();
    if (psi_plus.size() != n || psi_minus.size() != n)
        throw DataError("weight length mismatch in sandwich");
    const SurrogateLoss loss(model.loss);
    const Eigen::VectorXd g = model.g_hat_rows(basis_rows);

    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(k, k);
    Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const LossEval neg = loss.eval(-g[i]);
        const LossEval pos = loss.eval(g[i]);
        const double h = psi_plus[i] * neg.d2 + psi_minus[i] * pos.d2;
        const double s = -psi_plus[i] * neg.d1 + psi_minus[i] * pos.d1;
        q.selfadjointView<Eigen::Lower>().rankUpdate(basis_rows.row(i).transpose(), h);
        sig.selfadjointView<Eigen::Lower>().rankUpdate(basis_rows.row(i).transpose(), s * s);
    }
    q = q.selfadjointView<Eigen::Lower>();
    sig = sig.selfadjointView<Eigen::Lower>();
    q /= static_cast<double>(n);
    sig /= static_cast<double>(n);

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 1e-8)
        throw NumericError("singular design: min eigenvalue of Q below floor");

    model.Q = std::move(q);
    model.Sigma = std::move(sig);
}

Eigen::VectorXd sigma_hat_rows(const SieveModel& model, const Eigen::MatrixXd& basis_rows) {
    if (model.Q.size() == 0) throw NumericError("sandwich matrices not computed");
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(model.Q);
    if (ldlt.info() != Eigen::Success) throw NumericError("singular design: Q not factorizable");
    Eigen::VectorXd out(basis_rows.rows());
    for (Eigen::Index i = 0; i < basis_rows.rows(); ++i) {
        const Eigen::VectorXd v = ldlt.solve(basis_rows.row(i).transpose());
        const double s2 = v.dot(model.Sigma * v);
        out[i] = s2 > 0.0 ? std::sqrt(s2) : 0.0;
    }
    return out;
}

double sigma_hat(const SieveModel& model, const Eigen::VectorXd& x) {
    const SieveBasis basis(model.spec);
    Eigen::MatrixXd row(1, model.spec.total_terms());
    row.row(0) = basis.eval(x).transpose();
    return sigma_hat_rows(model, row)[0];
}

namespace {

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vec_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) arr.push_back(vec_to_json(m.row(i).transpose()));
    return arr;
}

Eigen::MatrixXd mat_from_json(const nlohmann::json& j) {
    if (j.empty()) return {};
    Eigen::MatrixXd m(j.size(), j[0].size());
    for (size_t i = 0; i < j.size(); ++i) m.row(i) = vec_from_json(j[i]).transpose();
    return m;
}

}  // namespace

nlohmann::json SieveModel::to_json() const {
    nlohmann::json j;
    j["spec"] = {{"k", spec.per_dim_order}, {"d", spec.dim}};
    j["loss"] = to_string(loss);
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& b : beta_per_fold) folds.push_back(vec_to_json(b));
    j["beta_per_fold"] = folds;
    j["beta_bar"] = vec_to_json(beta_bar);
    j["Q"] = mat_to_json(Q);
    j["Sigma"] = mat_to_json(Sigma);
    nlohmann::json diags = nlohmann::json::array();
    for (const auto& d : diagnostics)
        diags.push_back({{"newton_iterations", d.newton_iterations},
                         {"grad_norm", d.grad_norm},
                         {"objective", d.objective}});
    j["diagnostics"] = diags;
    return j;
}

SieveModel SieveModel::from_json(const nlohmann::json& j) {
    SieveModel m;
    m.spec.per_dim_order = j.at("spec").at("k").get<int>();
    m.spec.dim = j.at("spec").at("d").get<int>();
    m.loss = loss_kind_from_string(j.at("loss").get<std::string>());
    for (const auto& b : j.at("beta_per_fold")) m.beta_per_fold.push_back(vec_from_json(b));
    m.beta_bar = vec_from_json(j.at("beta_bar"));
    m.Q = mat_from_json(j.at("Q"));
    m.Sigma = mat_from_json(j.at("Sigma"));
    for (const auto& d : j.at("diagnostics")) {
        FitDiagnostics fd;
        fd.newton_iterations = d.at("newton_iterations").get<int>();
        fd.grad_norm = d.at("grad_norm").get<double>();
        fd.objective = d.at("objective").get<double>();
        m.diagnostics.push_back(fd);
    }
    return m;
}

}  // namespace polinf
