#include "polyfilter/poly_update.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "polyfilter/errors.hpp"

namespace polyfilter {

MonomialBasis::MonomialBasis(int meas_dim_, int order_) : meas_dim(meas_dim_), order(order_) {
    if (meas_dim < 1) throw InvalidArgument("MonomialBasis: measurement dimension must be >= 1");
    if (order < 1) throw UnsupportedOrder("MonomialBasis: order must be >= 1");
    for (int J = 1; J <= order; ++J) {
        dedup.push_back(dedup_map(meas_dim, J));
        centering.push_back(Eigen::VectorXd::Zero(ipow(meas_dim, J)));
    }
}

int MonomialBasis::full_width() const { return full_offset(order + 1); }
int MonomialBasis::unique_width() const { return unique_offset(order + 1); }

int MonomialBasis::full_offset(int J) const {
    int off = 0;
    for (int j = 1; j < J; ++j) off += ipow(meas_dim, j);
    return off;
}

int MonomialBasis::unique_offset(int J) const {
    int off = 0;
    for (int j = 1; j < J; ++j) off += dedup[j - 1].unique_count;
    return off;
}

Eigen::VectorXd MonomialBasis::compress(const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(unique_width());
    for (int J = 1; J <= order; ++J) {
        const DedupMap& d = dedup[J - 1];
        out.segment(unique_offset(J), d.unique_count) =
            d.compress(full.segment(full_offset(J), d.slot_count()));
    }
    return out;
}

Eigen::MatrixXd MonomialBasis::expand_gain(const Eigen::MatrixXd& gain_unique) const {
    Eigen::MatrixXd out(gain_unique.rows(), full_width());
    for (int J = 1; J <= order; ++J) {
        const DedupMap& d = dedup[J - 1];
        const int fo = full_offset(J);
        const int uo = unique_offset(J);
        for (int s = 0; s < d.slot_count(); ++s) {
            const int id = d.forward[s];
            out.col(fo + s) = gain_unique.col(uo + id) / static_cast<double>(d.multiplicity[id]);
        }
    }
    return out;
}

Eigen::MatrixXd GainBlocks::block(const MonomialBasis& basis, int J) const {
    if (J < 1 || J > basis.order) throw InvalidArgument("GainBlocks::block: order out of range");
    return K.middleCols(basis.full_offset(J), ipow(basis.meas_dim, J));
}

Eigen::VectorXd build_psi(const Eigen::VectorXd& delta_y, const MonomialBasis& basis) {
    if (delta_y.size() != basis.meas_dim) throw DimensionMismatch("build_psi: innovation length");
    Eigen::VectorXd psi(basis.full_width());
    for (int J = 1; J <= basis.order; ++J) {
        auto seg = psi.segment(basis.full_offset(J), ipow(basis.meas_dim, J));
        kron_power_into(delta_y, J, seg);
        seg -= basis.centering[J - 1];
    }
    return psi;
}

namespace {

// Rows of the raw Kronecker powers of every column: D x P.
Eigen::MatrixXd power_stack(const Eigen::MatrixXd& dy, const MonomialBasis& basis) {
    Eigen::MatrixXd Z(basis.full_width(), dy.cols());
    Eigen::VectorXd buf;
    for (Eigen::Index i = 0; i < dy.cols(); ++i) {
        const Eigen::VectorXd y = dy.col(i);
        for (int J = 1; J <= basis.order; ++J) {
            buf.resize(ipow(basis.meas_dim, J));
            kron_power_into(y, J, buf);
            Z.col(i).segment(basis.full_offset(J), buf.size()) = buf;
        }
    }
    return Z;
}

std::vector<int> representative_rows(const MonomialBasis& basis) {
    std::vector<int> rows;
    for (int J = 1; J <= basis.order; ++J)
        for (int rep : basis.dedup[J - 1].representative) rows.push_back(basis.full_offset(J) + rep);
    return rows;
}

void fill_unique(AugmentedMoments& am, const MonomialBasis& basis) {
    const std::vector<int> rows = representative_rows(basis);
    const auto du = static_cast<Eigen::Index>(rows.size());
    am.PxY_u.resize(am.PxY.rows(), du);
    am.PYY_u.resize(du, du);
    for (Eigen::Index a = 0; a < du; ++a) {
        am.PxY_u.col(a) = am.PxY.col(rows[a]);
        for (Eigen::Index b = 0; b < du; ++b) am.PYY_u(a, b) = am.PYY(rows[a], rows[b]);
    }
}

} // namespace

Assembly assemble(const SigmaSet& set, const Eigen::MatrixXd& dx, const Eigen::MatrixXd& dy, int order,
                  NoiseMode mode, const NoiseMoments* noise) {
    if (dx.cols() != set.size() || dy.cols() != set.size())
        throw DimensionMismatch("assemble: deviation columns must match the sigma set");
    if (mode == NoiseMode::Additive) {
        if (order > 2)
            throw AdditiveOrderUnsupported("additive noise compounding is available for order <= 2 only");
        if (!noise) throw InvalidArgument("assemble: additive mode needs measurement noise moments");
        if (noise->dim != dy.rows()) throw DimensionMismatch("assemble: noise dimension");
    }

    Assembly out{MonomialBasis(static_cast<int>(dy.rows()), order), {}};
    MonomialBasis& basis = out.basis;
    AugmentedMoments& am = out.moments;
    const int m = basis.meas_dim;
    const Eigen::VectorXd& w = set.w_cov;

    const Eigen::MatrixXd Z = power_stack(dy, basis);
    const Eigen::MatrixXd Zw = Z * w.asDiagonal();
    Eigen::MatrixXd raw = Zw * Z.transpose();  // sum w z z^T
    am.PxY = (dx * w.asDiagonal()) * Z.transpose();

    if (mode == NoiseMode::Additive) {
        if (order == 1) {
            raw += noise->cov;
        } else {
            const CompoundedMoments cm = compound_measurement_moments(
                raw.topLeftCorner(m, m), raw.topRightCorner(m, m * m), raw.bottomRightCorner(m * m, m * m), *noise);
            raw.topLeftCorner(m, m) = cm.Pyy;
            raw.topRightCorner(m, m * m) = cm.Pyy2;
            raw.bottomLeftCorner(m * m, m) = cm.Pyy2.transpose();
            raw.bottomRightCorner(m * m, m * m) = cm.Py2y2;
        }
    }

    // Centering: c_1 = 0, c_J = E[dy^[J]] for J >= 2. With noise compounded,
    // c_2 is read off the compounded covariance.
    Eigen::VectorXd c = Eigen::VectorXd::Zero(basis.full_width());
    for (int J = 2; J <= order; ++J) {
        const int off = basis.full_offset(J);
        const int len = ipow(m, J);
        if (mode == NoiseMode::Additive && J == 2) {
            c.segment(off, len) = vec(Eigen::MatrixXd(raw.topLeftCorner(m, m)));
        } else {
            c.segment(off, len) = Zw.middleRows(off, len).rowwise().sum();
        }
        basis.centering[J - 1] = c.segment(off, len);
    }
    am.PYY = raw - c * c.transpose();
    am.PYY = (0.5 * (am.PYY + am.PYY.transpose())).eval();
    fill_unique(am, basis);
    return out;
}

GainBlocks solve_gain(const AugmentedMoments& am, const MonomialBasis& basis, const SolvePolicy& policy) {
    const Eigen::Index du = basis.unique_width();
    if (am.PYY_u.rows() != du || am.PYY_u.cols() != du || am.PxY_u.cols() != du)
        throw DimensionMismatch("solve_gain: moments do not match the basis");

    const Eigen::VectorXd d = am.PYY_u.diagonal();
    if (!d.allFinite() || !am.PxY_u.allFinite()) throw SingularSystem("solve_gain: non-finite moments");
    // Equilibration; a non-positive diagonal already means an indefinite matrix.
    Eigen::VectorXd s(du);
    for (Eigen::Index i = 0; i < du; ++i) s(i) = d(i) != 0.0 ? 1.0 / std::sqrt(std::abs(d(i))) : 1.0;
    Eigen::MatrixXd A = s.asDiagonal() * am.PYY_u * s.asDiagonal();
    A = (0.5 * (A + A.transpose())).eval();
    const Eigen::MatrixXd rhs = s.asDiagonal() * am.PxY_u.transpose();

    GainBlocks g;
    g.order = basis.order;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const Eigen::VectorXd eig = es.eigenvalues();
    const double top = eig.maxCoeff();
    if (!(top > 0.0)) throw SingularSystem("solve_gain: measurement moment matrix has no positive direction");
    g.condition = eig.minCoeff() > 0.0 ? top / eig.minCoeff() : INFINITY;

    const Eigen::MatrixXd& V = es.eigenvectors();
    auto spectral_solve = [&](const Eigen::VectorXd& inv) {
        return Eigen::MatrixXd((s.asDiagonal() * (V * (inv.asDiagonal() * (V.transpose() * rhs)))).transpose());
    };
    // Eigenvalues at roundoff level are exact rank deficiency (e.g. point sets
    // whose monomials are linearly dependent), not ill-conditioning.
    const double rank_tol = static_cast<double>(du) * std::numeric_limits<double>::epsilon() * top;

    if (eig.minCoeff() < -policy.indefinite_tol * top) {
        // Pseudo-inverse over the well-posed directions only.
        const double floor = top / policy.max_condition;
        Eigen::VectorXd inv = Eigen::VectorXd::Zero(du);
        for (Eigen::Index i = 0; i < du; ++i) {
            if (eig(i) > floor) inv(i) = 1.0 / eig(i);
            else ++g.truncated;
        }
        g.K_u = spectral_solve(inv);
    } else if (eig.minCoeff() <= rank_tol) {
        // Minimum-norm solve on the numerical range, with the ridge if what
        // remains is still ill-conditioned.
        double low = top;
        for (Eigen::Index i = 0; i < du; ++i) {
            if (eig(i) > rank_tol) low = std::min(low, eig(i));
            else ++g.truncated;
        }
        g.condition = top / low;
        double ridge = 0.0;
        if (!(g.condition <= policy.max_condition)) {
            ridge = policy.ridge_rel * A.trace() / static_cast<double>(du);
            g.ridge_applied = true;
        }
        Eigen::VectorXd inv = Eigen::VectorXd::Zero(du);
        for (Eigen::Index i = 0; i < du; ++i)
            if (eig(i) > rank_tol) inv(i) = 1.0 / (eig(i) + ridge);
        g.K_u = spectral_solve(inv);
    } else {
        if (!(g.condition <= policy.max_condition)) {
            A.diagonal().array() += policy.ridge_rel * A.trace() / static_cast<double>(du);
            g.ridge_applied = true;
        }
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() != Eigen::Success)
            throw SingularSystem("solve_gain: measurement moment matrix is singular after regularization");
        // K_u = PxY_u S A^-1 S
        g.K_u = (s.asDiagonal() * llt.solve(rhs)).transpose();
    }
    if (!g.K_u.allFinite()) throw SingularSystem("solve_gain: non-finite gain");
    g.K = basis.expand_gain(g.K_u);
    return g;
}

Posterior update(const Eigen::VectorXd& prior_mean, const Eigen::MatrixXd& prior_cov, const GainBlocks& gain,
                 const AugmentedMoments& am, const MonomialBasis& basis, const Eigen::VectorXd& innovation,
                 const PsdPolicy& psd) {
    if (gain.K_u.rows() != prior_mean.size() || prior_cov.rows() != prior_mean.size())
        throw DimensionMismatch("update: gain rows must match the state dimension");
    const Eigen::VectorXd psi_u = basis.compress(build_psi(innovation, basis));
    Posterior post;
    post.mean = prior_mean + gain.K_u * psi_u;
    post.cov = enforce_psd(prior_cov - gain.K_u * am.PYY_u * gain.K_u.transpose(), psd);
    return post;
}

Posterior update(const Eigen::VectorXd& prior_mean, const Eigen::MatrixXd& prior_cov, const GainBlocks& gain,
                 const AugmentedMoments& am, const MonomialBasis& basis, const Eigen::VectorXd& measured_y,
                 const Eigen::VectorXd& predicted_y, const PsdPolicy& psd) {
    if (measured_y.size() != predicted_y.size()) throw DimensionMismatch("update: measurement lengths differ");
    return update(prior_mean, prior_cov, gain, am, basis, Eigen::VectorXd(measured_y - predicted_y), psd);
}

} // namespace polyfilter
