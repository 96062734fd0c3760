#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "polinf/problems.hpp"
#include "polinf/sieve_basis.hpp"

namespace polinf {

// Seeded, approximately balanced partition of [n] into m folds
// (fold sizes differ by at most 1).
struct FoldPartition {
    int m = 2;
    std::uint64_t seed = 0;
    std::vector<int> assignment;  // row -> fold id

    static FoldPartition make(int n, int m, std::uint64_t seed);

    int n() const { return static_cast<int>(assignment.size()); }
    std::vector<std::vector<int>> fold_indices() const;
    std::vector<int> complement_indices(int fold) const;
};

struct LassoFit {
    Eigen::VectorXd coef;  // [intercept, slopes...] on the original feature scale
    double lambda = 0.0;
    int iterations = 0;
    double kkt_residual = 0.0;  // max KKT violation on the standardized scale

    double predict(const Eigen::VectorXd& features) const;
};

// (1/2n) ||y - intercept - F b||^2 + lambda * ||b||_1 by cyclic coordinate
// descent on internally standardized columns; intercept unpenalized.
// Converged when the largest standardized coefficient change <= 1e-8.
LassoFit fit_lasso(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                   double lambda);

struct LogisticFit {
    Eigen::VectorXd coef;  // [intercept, slopes...] on the original feature scale
    double lambda = 0.0;
    int iterations = 0;
    double objective = 0.0;  // mean negative log-likelihood + penalty

    double predict_logit(const Eigen::VectorXd& features) const;
    double predict_prob(const Eigen::VectorXd& features) const;
};

// Mean negative log-likelihood + lambda * ||b||_1 by proximal gradient with
// backtracking (monotone in the objective); intercept unpenalized.
LogisticFit fit_logistic_l1(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                            double lambda);

// Descending log-spaced penalty grid from the KKT zeroing threshold
// lambda_max down to lambda_max / 1000.
std::vector<double> lambda_grid(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                                int size);

// Path fitter contract for cross-validation: returns one coefficient vector
// ([intercept, slopes...]) per grid value, warm-started down the path.
struct PathFitter {
    std::function<std::vector<Eigen::VectorXd>(const Eigen::MatrixXd&, const Eigen::VectorXd&,
                                               std::span<const double>)> fit_path;
    std::function<double(const Eigen::VectorXd& coef, const Eigen::MatrixXd&,
                         const Eigen::VectorXd&)> heldout_loss;
};

PathFitter lasso_path_fitter();
PathFitter logistic_path_fitter();

// Grid value minimizing mean held-out loss over seeded folds; ties broken
// toward the larger penalty. Grid must be nonempty and descending.
double cross_validate(const PathFitter& fitter, const Eigen::MatrixXd& features,
                      const Eigen::VectorXd& y, std::span<const double> grid, int folds,
                      std::uint64_t seed);

enum class NuisanceMode { crossfit, fullsample };

struct NuisanceConfig {
    int k = 3;          // tensor-Legendre order of the nuisance feature expansion
    int cv_folds = 5;
    int grid_size = 50;
    std::uint64_t seed = 0;
};

// eta = (mu(1,.), mu(0,.), pi(.)) fitted per fold on the fold's complement
// (crossfit) or once on everything (fullsample). Outcome models are lasso
// fits per treatment arm; the propensity is an l1-penalized logistic fit.
class NuisanceFit {
public:
    struct FoldModels {
        LassoFit mu1, mu0;
        LogisticFit pi;
    };

    NuisanceMode mode() const { return mode_; }
    const NuisanceConfig& config() const { return config_; }
    const std::vector<FoldModels>& fold_models() const { return models_; }

    // Per-row predictions honoring cross-fitting: row i is predicted by the
    // model fitted on the complement of i's fold. pi is clipped to
    // [0.01, 0.99].
    void predict(const ObservationTable& table, const FoldPartition& folds,
                 Eigen::VectorXd& mu1_hat, Eigen::VectorXd& mu0_hat,
                 Eigen::VectorXd& pi_hat) const;

    friend NuisanceFit fit_nuisance(const ObservationTable&, const FoldPartition&, NuisanceMode,
                                    const NuisanceConfig&);

private:
    NuisanceMode mode_ = NuisanceMode::crossfit;
    NuisanceConfig config_;
    std::vector<FoldModels> models_;  // one per fold (crossfit) or a single entry
    BasisSpec feature_spec_;

    Eigen::MatrixXd features_for(const ObservationTable& table) const;
};

NuisanceFit fit_nuisance(const ObservationTable& table, const FoldPartition& folds,
                         NuisanceMode mode, const NuisanceConfig& config);

}  // namespace polinf
