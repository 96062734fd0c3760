#include "polinf/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polinf/errors.hpp"
#include "polinf/rng.hpp"

namespace polinf {

FoldPartition FoldPartition::make(int n, int m, std::uint64_t seed) {
    if (m < 2) throw ConfigError("need at least 2 folds");
    if (m > n) throw ConfigError("more folds than observations");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto eng = make_engine(seed, {0x666f6c64ULL});
    std::shuffle(order.begin(), order.end(), eng);

    FoldPartition part;
    part.m = m;
    part.seed = seed;
    part.assignment.assign(n, -1);
    // First (n mod m) folds take one extra row.
    const int base = n / m, extra = n % m;
    int pos = 0;
    for (int f = 0; f < m; ++f) {
        const int size = base + (f < extra ? 1 : 0);
        for (int j = 0; j < size; ++j) part.assignment[order[pos++]] = f;
    }
    return part;
}

std::vector<std::vector<int>> FoldPartition::fold_indices() const {
    std::vector<std::vector<int>> folds(m);
    for (int i = 0; i < n(); ++i) folds[assignment[i]].push_back(i);
    return folds;
}

std::vector<int> FoldPartition::complement_indices(int fold) const {
    std::vector<int> rows;
    for (int i = 0; i < n(); ++i)
        if (assignment[i] != fold) rows.push_back(i);
    return rows;
}

namespace {

struct Standardized {
    Eigen::MatrixXd f;          // mean 0, <f_j,f_j>/n = 1 columns (constants zeroed)
    Eigen::VectorXd mean, scale;
    std::vector<bool> constant;
};

Standardized standardize(const Eigen::MatrixXd& features) {
    const Eigen::Index n = features.rows(), p = features.cols();
    Standardized s;
    s.f = features;
    s.mean = features.colwise().mean();
    s.scale.resize(p);
    s.constant.assign(p, false);
    for (Eigen::Index j = 0; j < p; ++j) {
        s.f.col(j).array() -= s.mean[j];
        const double norm2 = s.f.col(j).squaredNorm() / static_cast<double>(n);
        if (norm2 < 1e-24) {
            s.constant[j] = true;
            s.scale[j] = 1.0;
            s.f.col(j).setZero();
        } else {
            s.scale[j] = std::sqrt(norm2);
            s.f.col(j) /= s.scale[j];
        }
    }
    return s;
}

// De-standardize slopes and fold the centering into the intercept.
Eigen::VectorXd destandardize(const Standardized& s, double intercept_std,
                              const Eigen::VectorXd& beta_std) {
    Eigen::VectorXd coef(beta_std.size() + 1);
    double intercept = intercept_std;
    for (Eigen::Index j = 0; j < beta_std.size(); ++j) {
        const double slope = s.constant[j] ? 0.0 : beta_std[j] / s.scale[j];
        coef[j + 1] = slope;
        intercept -= slope * s.mean[j];
    }
    coef[0] = intercept;
    return coef;
}

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

// Coordinate descent on standardized columns; y already centered.
// Returns standardized slopes; `beta` doubles as warm start.
int lasso_cd(const Standardized& s, const Eigen::VectorXd& y_centered, double lambda,
             Eigen::VectorXd& beta) {
    const Eigen::Index n = s.f.rows(), p = s.f.cols();
    Eigen::VectorXd residual = y_centered - s.f * beta;
    const int max_sweeps = 10000;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (s.constant[j]) continue;
            const double old = beta[j];
            const double rho = s.f.col(j).dot(residual) / static_cast<double>(n) + old;
            const double updated = soft_threshold(rho, lambda);
            if (updated != old) {
                residual -= (updated - old) * s.f.col(j);
                beta[j] = updated;
                max_change = std::max(max_change, std::abs(updated - old));
            }
        }
        if (max_change <= 1e-8) break;
    }
    return sweep + 1;
}

double lasso_kkt_residual(const Standardized& s, const Eigen::VectorXd& y_centered,
                          double lambda, const Eigen::VectorXd& beta) {
    const Eigen::Index n = s.f.rows(), p = s.f.cols();
    const Eigen::VectorXd residual = y_centered - s.f * beta;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (s.constant[j]) continue;
        const double grad = s.f.col(j).dot(residual) / static_cast<double>(n);
        if (beta[j] != 0.0)
            worst = std::max(worst, std::abs(grad - lambda * (beta[j] > 0 ? 1.0 : -1.0)));
        else
            worst = std::max(worst, std::max(0.0, std::abs(grad) - lambda));
    }
    return worst;
}

void check_lasso_inputs(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                        double lambda) {
    if (features.rows() != y.size()) throw DataError("feature/target length mismatch");
    if (features.rows() < 2) throw DataError("need at least 2 rows to fit");
    if (!features.allFinite() || !y.allFinite()) throw NumericError("non-finite fit input");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw NumericError("invalid penalty level");
}

double logistic_objective(const Eigen::MatrixXd& f, const Eigen::VectorXd& y, double lambda,
                          double intercept, const Eigen::VectorXd& beta) {
    const Eigen::Index n = f.rows();
    const Eigen::VectorXd eta = (f * beta).array() + intercept;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double e = eta[i];
        // log(1 + exp(e)) - y*e, stable for both signs of e
        const double lse = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
        nll += lse - y[i] * e;
    }
    return nll / static_cast<double>(n) + lambda * beta.cwiseAbs().sum();
}

}  // namespace

double LassoFit::predict(const Eigen::VectorXd& features) const {
    return coef[0] + coef.tail(coef.size() - 1).dot(features);
}

LassoFit fit_lasso(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                   double lambda) {
    check_lasso_inputs(features, targets, lambda);
    const Standardized s = standardize(features);
    const double y_mean = targets.mean();
    const Eigen::VectorXd y_centered = targets.array() - y_mean;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(features.cols());
    LassoFit fit;
    fit.lambda = lambda;
    fit.iterations = lasso_cd(s, y_centered, lambda, beta);
    fit.kkt_residual = lasso_kkt_residual(s, y_centered, lambda, beta);
    fit.coef = destandardize(s, y_mean, beta);
    return fit;
}

double LogisticFit::predict_logit(const Eigen::VectorXd& features) const {
    return coef[0] + coef.tail(coef.size() - 1).dot(features);
}

double LogisticFit::predict_prob(const Eigen::VectorXd& features) const {
    const double eta = predict_logit(features);
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

void check_logistic_labels(const Eigen::VectorXd& labels) {
    bool has0 = false, has1 = false;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        if (labels[i] == 0.0) has0 = true;
        else if (labels[i] == 1.0) has1 = true;
        else throw DataError("logistic labels must be in {0,1}");
    }
    if (!has0 || !has1) throw DataError("degenerate labels: both classes required");
}

// Outer IRLS loop with a weighted-lasso coordinate-descent inner solve and a
// halving safeguard that keeps the penalized objective monotone; intercept
// and beta double as warm starts. Returns the outer iteration count.
int logistic_irls_cd(const Standardized& s, const Eigen::VectorXd& labels, double lambda,
                     double& intercept, Eigen::VectorXd& beta, double& obj_out) {
    const Eigen::Index n = s.f.rows(), p = s.f.cols();
    double obj = logistic_objective(s.f, labels, lambda, intercept, beta);
    const int max_outer = 500;
    int outer = 0;
    for (; outer < max_outer; ++outer) {
        const Eigen::VectorXd eta = (s.f * beta).array() + intercept;
        Eigen::VectorXd w(n), z(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double pr = eta[i] >= 0 ? 1.0 / (1.0 + std::exp(-eta[i]))
                                    : std::exp(eta[i]) / (1.0 + std::exp(eta[i]));
            pr = std::clamp(pr, 1e-5, 1.0 - 1e-5);
            w[i] = pr * (1.0 - pr);
            z[i] = eta[i] + (labels[i] - pr) / w[i];
        }
        const double w_sum = w.sum();

        // Weighted lasso on the working response.
        Eigen::VectorXd denom(p);
        Eigen::MatrixXd wf(n, p);
        for (Eigen::Index j = 0; j < p; ++j) {
            wf.col(j) = s.f.col(j).cwiseProduct(w);
            denom[j] = wf.col(j).dot(s.f.col(j));
        }
        double b0 = intercept;
        Eigen::VectorXd b = beta;
        Eigen::VectorXd residual = z - (s.f * b).array().matrix();
        residual.array() -= b0;
        for (int sweep = 0; sweep < 200; ++sweep) {
            double max_change = 0.0;
            {
                const double shift = w.dot(residual) / w_sum;
                b0 += shift;
                residual.array() -= shift;
                max_change = std::abs(shift);
            }
            for (Eigen::Index j = 0; j < p; ++j) {
                if (s.constant[j] || denom[j] <= 0.0) continue;
                const double rho = wf.col(j).dot(residual) + denom[j] * b[j];
                const double updated =
                    soft_threshold(rho / static_cast<double>(n), lambda) /
                    (denom[j] / static_cast<double>(n));
                if (updated != b[j]) {
                    residual -= (updated - b[j]) * s.f.col(j);
                    max_change = std::max(max_change, std::abs(updated - b[j]));
                    b[j] = updated;
                }
            }
            if (max_change <= 1e-9) break;
        }

        // The local quadratic model can overshoot; halve toward the previous
        // point until the true objective decreases.
        double t = 1.0;
        double new_obj = 0.0;
        double cand0 = b0;
        Eigen::VectorXd cand = b;
        bool improved = false;
        for (int h = 0; h < 30; ++h) {
            cand0 = intercept + t * (b0 - intercept);
            cand = beta + t * (b - beta);
            new_obj = logistic_objective(s.f, labels, lambda, cand0, cand);
            if (new_obj <= obj + 1e-15 * (1.0 + std::abs(obj))) {
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if (!improved) break;  // no further progress possible at this scale

        const double max_change = std::max((cand - beta).cwiseAbs().maxCoeff(),
                                           std::abs(cand0 - intercept));
        intercept = cand0;
        beta.swap(cand);
        obj = std::min(obj, new_obj);
        if (max_change <= 1e-8) break;
    }
    obj_out = obj;
    return outer + 1;
}

LogisticFit fit_logistic_l1(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                            double lambda) {
    check_lasso_inputs(features, labels, lambda);
    check_logistic_labels(labels);

    const Standardized s = standardize(features);
    double intercept = std::log(labels.mean() / (1.0 - labels.mean()));
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(features.cols());

    LogisticFit fit;
    fit.lambda = lambda;
    fit.iterations = logistic_irls_cd(s, labels, lambda, intercept, beta, fit.objective);
    fit.coef = destandardize(s, intercept, beta);
    return fit;
}

std::vector<double> lambda_grid(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                                int size) {
    if (size < 1) throw ConfigError("penalty grid size must be >= 1");
    const Standardized s = standardize(features);
    const Eigen::VectorXd y_centered = y.array() - y.mean();
    double lmax = 0.0;
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        if (s.constant[j]) continue;
        lmax = std::max(lmax, std::abs(s.f.col(j).dot(y_centered)) /
                                  static_cast<double>(features.rows()));
    }
    lmax = std::max(lmax, 1e-10);
    std::vector<double> grid(size);
    if (size == 1) {
        grid[0] = lmax;
        return grid;
    }
    const double lmin = lmax / 1000.0;
    for (int i = 0; i < size; ++i)
        grid[i] = std::exp(std::log(lmax) + (std::log(lmin) - std::log(lmax)) * i / (size - 1));
    return grid;
}

PathFitter lasso_path_fitter() {
    PathFitter p;
    p.fit_path = [](const Eigen::MatrixXd& f, const Eigen::VectorXd& y,
                    std::span<const double> grid) {
        const Standardized s = standardize(f);
        const double y_mean = y.mean();
        const Eigen::VectorXd y_centered = y.array() - y_mean;
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(f.cols());
        std::vector<Eigen::VectorXd> path;
        path.reserve(grid.size());
        for (double lambda : grid) {
            lasso_cd(s, y_centered, lambda, beta);
            path.push_back(destandardize(s, y_mean, beta));
        }
        return path;
    };
    p.heldout_loss = [](const Eigen::VectorXd& coef, const Eigen::MatrixXd& f,
                        const Eigen::VectorXd& y) {
        const Eigen::VectorXd pred =
            (f * coef.tail(coef.size() - 1)).array() + coef[0];
        return (y - pred).squaredNorm() / static_cast<double>(y.size());
    };
    return p;
}

PathFitter logistic_path_fitter() {
    PathFitter p;
    p.fit_path = [](const Eigen::MatrixXd& f, const Eigen::VectorXd& y,
                    std::span<const double> grid) {
        check_logistic_labels(y);
        const Standardized s = standardize(f);
        double intercept = std::log(y.mean() / (1.0 - y.mean()));
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(f.cols());
        std::vector<Eigen::VectorXd> path;
        path.reserve(grid.size());
        double obj = 0.0;
        for (double lambda : grid) {
            logistic_irls_cd(s, y, lambda, intercept, beta, obj);
            path.push_back(destandardize(s, intercept, beta));
        }
        return path;
    };
    p.heldout_loss = [](const Eigen::VectorXd& coef, const Eigen::MatrixXd& f,
                        const Eigen::VectorXd& y) {
        const Eigen::VectorXd eta = (f * coef.tail(coef.size() - 1)).array() + coef[0];
        double loss = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double e = eta[i];
            const double lse = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
            loss += lse - y[i] * e;
        }
        return loss / static_cast<double>(y.size());
    };
    return p;
}

double cross_validate(const PathFitter& fitter, const Eigen::MatrixXd& features,
                      const Eigen::VectorXd& y, std::span<const double> grid, int folds,
                      std::uint64_t seed) {
    if (grid.empty()) throw ConfigError("empty penalty grid");
    for (size_t i = 1; i < grid.size(); ++i)
        if (grid[i] > grid[i - 1]) throw ConfigError("penalty grid must be descending");
    if (grid.size() == 1) return grid[0];

    const int n = static_cast<int>(y.size());
    const FoldPartition part = FoldPartition::make(n, folds, seed);
    const auto fold_rows = part.fold_indices();

    std::vector<double> cv_loss(grid.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
        const auto train_rows = part.complement_indices(f);
        const auto& test_rows = fold_rows[f];
        Eigen::MatrixXd f_train(train_rows.size(), features.cols());
        Eigen::VectorXd y_train(train_rows.size());
        for (size_t i = 0; i < train_rows.size(); ++i) {
            f_train.row(i) = features.row(train_rows[i]);
            y_train[i] = y[train_rows[i]];
        }
        Eigen::MatrixXd f_test(test_rows.size(), features.cols());
        Eigen::VectorXd y_test(test_rows.size());
        for (size_t i = 0; i < test_rows.size(); ++i) {
            f_test.row(i) = features.row(test_rows[i]);
            y_test[i] = y[test_rows[i]];
        }
        const auto path = fitter.fit_path(f_train, y_train, grid);
        for (size_t g = 0; g < grid.size(); ++g)
            cv_loss[g] += fitter.heldout_loss(path[g], f_test, y_test) / folds;
    }

    // Grid is descending, so scanning from the front prefers larger penalties.
    size_t best = 0;
    for (size_t g = 1; g < grid.size(); ++g)
        if (cv_loss[g] < cv_loss[best]) best = g;
    return grid[best];
}

Eigen::MatrixXd NuisanceFit::features_for(const ObservationTable& table) const {
    const SieveBasis basis(feature_spec_);
    const Eigen::MatrixXd full = basis.eval_rows(table.x);
    // Drop the constant leading term; the fitters carry their own intercept.
    return full.rightCols(full.cols() - 1);
}

void NuisanceFit::predict(const ObservationTable& table, const FoldPartition& folds,
                          Eigen::VectorXd& mu1_hat, Eigen::VectorXd& mu0_hat,
                          Eigen::VectorXd& pi_hat) const {
    const int n = table.n();
    const Eigen::MatrixXd f = features_for(table);
    mu1_hat.resize(n);
    mu0_hat.resize(n);
    pi_hat.resize(n);
    for (int i = 0; i < n; ++i) {
        const int model_id = mode_ == NuisanceMode::fullsample ? 0 : folds.assignment[i];
        const FoldModels& m = models_[model_id];
        const Eigen::VectorXd fi = f.row(i).transpose();
        mu1_hat[i] = m.mu1.predict(fi);
        mu0_hat[i] = m.mu0.predict(fi);
        pi_hat[i] = std::clamp(m.pi.predict_prob(fi), 0.01, 0.99);
    }
}

NuisanceFit fit_nuisance(const ObservationTable& table, const FoldPartition& folds,
                         NuisanceMode mode, const NuisanceConfig& config) {
    table.validate(ProblemKind::welfare);
    if (folds.n() != table.n()) throw DataError("fold partition size mismatch");

    NuisanceFit fit;
    fit.mode_ = mode;
    fit.config_ = config;
    fit.feature_spec_ = BasisSpec{config.k, table.dim()};
    fit.feature_spec_.validate();

    const Eigen::MatrixXd features = fit.features_for(table);
    const Eigen::VectorXd& a = *table.a;

    auto fit_on_rows = [&](const std::vector<int>& rows, std::uint64_t salt) {
        std::vector<int> treated, control;
        for (int r : rows) (a[r] == 1.0 ? treated : control).push_back(r);
        if (treated.size() < 2 || control.size() < 2)
            throw DataError("insufficient treated or control rows in a nuisance training set");

        auto subset = [&](const std::vector<int>& idx, Eigen::MatrixXd& fs, Eigen::VectorXd& ys,
                          bool label_is_a) {
            fs.resize(idx.size(), features.cols());
            ys.resize(idx.size());
            for (size_t i = 0; i < idx.size(); ++i) {
                fs.row(i) = features.row(idx[i]);
                ys[i] = label_is_a ? a[idx[i]] : table.y[idx[i]];
            }
        };

        NuisanceFit::FoldModels m;
        Eigen::MatrixXd fs;
        Eigen::VectorXd ys;

        subset(treated, fs, ys, false);
        {
            const auto grid = lambda_grid(fs, ys, config.grid_size);
            const double lam = cross_validate(lasso_path_fitter(), fs, ys, grid,
                                              config.cv_folds, mix_seed(config.seed, {salt, 1}));
            m.mu1 = fit_lasso(fs, ys, lam);
        }
        subset(control, fs, ys, false);
        {
            const auto grid = lambda_grid(fs, ys, config.grid_size);
            const double lam = cross_validate(lasso_path_fitter(), fs, ys, grid,
                                              config.cv_folds, mix_seed(config.seed, {salt, 2}));
            m.mu0 = fit_lasso(fs, ys, lam);
        }
        subset(rows, fs, ys, true);
        {
            const auto grid = lambda_grid(fs, ys, config.grid_size);
            const double lam = cross_validate(logistic_path_fitter(), fs, ys, grid,
                                              config.cv_folds, mix_seed(config.seed, {salt, 3}));
            m.pi = fit_logistic_l1(fs, ys, lam);
        }
        return m;
    };

    if (mode == NuisanceMode::fullsample) {
        std::vector<int> all(table.n());
        std::iota(all.begin(), all.end(), 0);
        fit.models_.push_back(fit_on_rows(all, 0xffffULL));
    } else {
        for (int f = 0; f < folds.m; ++f)
            fit.models_.push_back(fit_on_rows(folds.complement_indices(f), 0x100ULL + f));
    }
    return fit;
}

}  // namespace polinf
