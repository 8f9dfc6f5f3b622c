// Order-N polynomial measurement update.
//
// The regressor is psi = [dy; dy^[2] - c_2; ...; dy^[N] - c_N] and the gain
// solves K PYY = PxY. Moments are carried both at full Kronecker width and in
// the deduplicated monomial basis, where PYY is generically nonsingular.
#pragma once

#include <Eigen/Dense>

#include <vector>

#include "polyfilter/kron_tensor.hpp"
#include "polyfilter/moments.hpp"
#include "polyfilter/sigma_points.hpp"

namespace polyfilter {

enum class NoiseMode { Additive, Augmented };

struct MonomialBasis {
    int meas_dim = 0;
    int order = 0;
    std::vector<Eigen::VectorXd> centering;  // c_J for J = 1..N, c_1 == 0
    std::vector<DedupMap> dedup;             // per order J = 1..N

    MonomialBasis() = default;
    MonomialBasis(int meas_dim, int order);

    int full_width() const;
    int unique_width() const;
    int full_offset(int J) const;    // first row of block J (1-based J)
    int unique_offset(int J) const;

    Eigen::VectorXd compress(const Eigen::VectorXd& full) const;
    /// Gain columns at full width: each monomial column is split evenly over its slots.
    Eigen::MatrixXd expand_gain(const Eigen::MatrixXd& gain_unique) const;
};

struct AugmentedMoments {
    Eigen::MatrixXd PxY;    // n_x x D
    Eigen::MatrixXd PYY;    // D x D
    Eigen::MatrixXd PxY_u;  // n_x x D_u
    Eigen::MatrixXd PYY_u;  // D_u x D_u
};

struct GainBlocks {
    int order = 0;
    Eigen::MatrixXd K;    // n_x x D
    Eigen::MatrixXd K_u;  // n_x x D_u
    bool solved_in_dedup = true;
    bool ridge_applied = false;
    int truncated = 0;       // directions dropped as indefinite or numerically null
    double condition = 0.0;  // condition number of the equilibrated system

    /// Columns of K belonging to order J (1-based).
    Eigen::MatrixXd block(const MonomialBasis& basis, int J) const;
};

/// Stacked regressor [dy; dy^[2] - c_2; ...] at full width.
Eigen::VectorXd build_psi(const Eigen::VectorXd& delta_y, const MonomialBasis& basis);

struct Assembly {
    MonomialBasis basis;
    AugmentedMoments moments;
};

/// Moments from transformed sigma points. dx and dy are deviations of the
/// state and measurement columns from their predicted means. In additive mode
/// `noise` describes eta and dy must be noiseless; order must be <= 2.
Assembly assemble(const SigmaSet& set, const Eigen::MatrixXd& dx, const Eigen::MatrixXd& dy, int order,
                  NoiseMode mode, const NoiseMoments* noise = nullptr);

struct SolvePolicy {
    double max_condition = 1e12;
    double ridge_rel = 1e-12;
    double indefinite_tol = 1e-10;  // on eigenvalues of the equilibrated PYY
};

/// Equilibrated Cholesky solve of K PYY = PxY in the deduplicated basis,
/// with one ridge retry. When the sigma rule produced an indefinite PYY
/// (UT cross moments, negative weights) the solve is restricted to the
/// eigen-directions above max_condition^-1 of the largest. Directions at
/// roundoff level are dropped before the ridge test. Throws SingularSystem.
GainBlocks solve_gain(const AugmentedMoments& am, const MonomialBasis& basis, const SolvePolicy& policy = {});

struct Posterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Update with an explicit innovation dy = y_measured - y_predicted.
Posterior update(const Eigen::VectorXd& prior_mean, const Eigen::MatrixXd& prior_cov, const GainBlocks& gain,
                 const AugmentedMoments& am, const MonomialBasis& basis, const Eigen::VectorXd& innovation,
                 const PsdPolicy& psd = {});

Posterior update(const Eigen::VectorXd& prior_mean, const Eigen::MatrixXd& prior_cov, const GainBlocks& gain,
                 const AugmentedMoments& am, const MonomialBasis& basis, const Eigen::VectorXd& measured_y,
                 const Eigen::VectorXd& predicted_y, const PsdPolicy& psd = {});

} // namespace polyfilter
