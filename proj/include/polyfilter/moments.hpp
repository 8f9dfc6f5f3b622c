// Noise moments up to fourth order and the additive compounding rules used
// by the quadratic update.
#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace polyfilter {

/// Central moments of a zero-mean noise vector of dimension n.
///
/// Layouts: skew is E[d (d (x) d)^T] (n x n^2) and kurt is the raw fourth
/// moment E[(d (x) d)(d (x) d)^T] (n^2 x n^2).
struct NoiseMoments {
    int dim = 0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    Eigen::MatrixXd skew;
    Eigen::MatrixXd kurt;

    static NoiseMoments zero(int dim);
};

/// Isserlis closure: zero skew, kurt((p,q),(r,s)) = P_pq P_rs + P_pr P_qs + P_ps P_qr.
NoiseMoments gaussian_moments(const Eigen::MatrixXd& cov);

/// Exact moments of a finite distribution. The weighted mean must vanish.
NoiseMoments discrete_moments(const std::vector<Eigen::VectorXd>& values,
                              const std::vector<double>& probs);

/// A finite distribution kept alongside its moments for truth simulation.
struct DiscreteDistribution {
    std::vector<Eigen::VectorXd> values;
    std::vector<double> probs;
};

/// Product distribution of independent scalar channels sharing one table.
DiscreteDistribution iid_discrete(const std::vector<double>& values,
                                  const std::vector<double>& probs, int channels);

/// Draws one value; the generator is owned by the caller.
Eigen::VectorXd sample_discrete(const std::vector<Eigen::VectorXd>& values,
                                const std::vector<double>& probs, std::mt19937_64& rng);

/// Measurement moments after adding independent noise.
struct CompoundedMoments {
    Eigen::MatrixXd Pyy;    // m x m
    Eigen::MatrixXd Pyy2;   // m x m^2
    Eigen::MatrixXd Py2y2;  // m^2 x m^2
};

/// Adds independent zero-mean noise to the central moments of a noiseless
/// measurement: y = y_bar + eta.
CompoundedMoments compound_measurement_moments(const Eigen::MatrixXd& Pyy_bar,
                                               const Eigen::MatrixXd& Pyy2_bar,
                                               const Eigen::MatrixXd& Py2y2_bar,
                                               const NoiseMoments& noise);

} // namespace polyfilter
