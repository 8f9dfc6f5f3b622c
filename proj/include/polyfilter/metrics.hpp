// Error statistics over Monte Carlo results and empirical polynomial MMSE baselines.
#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "polyfilter/campaign.hpp"
#include "polyfilter/poly_update.hpp"

namespace polyfilter {

/// sqrt(sum e^2 / count). Throws InvalidArgument on empty input.
double rmse(const Eigen::VectorXd& errors);

/// RMSE over all steps, non-failed runs and primary components.
double filter_rmse(const MCResult& result, std::size_t filter);

/// Per-run RMSE over steps and the primary components (NaN for failed runs).
Eigen::VectorXd per_run_rmse(const MCResult& result, std::size_t filter);

struct SigmaCurve {
    std::string filter;
    std::string group;
    Eigen::VectorXd est;  // per step, sqrt of the mean covariance trace
    Eigen::VectorXd eff;  // per step, ensemble spread of the errors
    int included_runs = 0;
};

/// Estimated and effective standard deviations per filter and state group.
/// Needs at least two included runs per filter; throws InvalidArgument otherwise.
std::vector<SigmaCurve> sigma_curves(const MCResult& result);

/// sqrt(sum_k mean_runs |e_k - mean e_k|^2) for an ensemble (runs x components).
double effective_sigma(const Eigen::MatrixXd& ensemble);

struct PolynomialFit {
    int order = 0;
    Eigen::VectorXd y_mean;
    Eigen::MatrixXd coefficients;  // n_x x (1 + D_u), intercept first
    MonomialBasis basis;            // centering carries the sample moments
    double rmse = 0.0;              // in-sample, over all state components
    bool regularized = false;

    Eigen::VectorXd predict(const Eigen::VectorXd& y) const;
};

/// Least-squares projection of x onto {1, psi_N(y - mean y)}. Rows are samples.
PolynomialFit fit_polynomial_mmse(const Eigen::MatrixXd& samples_x, const Eigen::MatrixXd& samples_y, int order);

} // namespace polyfilter
