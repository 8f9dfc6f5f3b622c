#include "polyfilter/models.hpp"

#include <numbers>

namespace polyfilter {

Matrix6d cw_stm(double n, double t) {
    const double s = std::sin(n * t);
    const double c = std::cos(n * t);
    Matrix6d phi = Matrix6d::Zero();
    if (t == 0.0) return Matrix6d::Identity();
    // Position rows.
    phi(0, 0) = 4.0 - 3.0 * c;
    phi(0, 3) = s / n;
    phi(0, 4) = 2.0 * (1.0 - c) / n;
    phi(1, 0) = 6.0 * (s - n * t);
    phi(1, 1) = 1.0;
    phi(1, 3) = -2.0 * (1.0 - c) / n;
    phi(1, 4) = (4.0 * s - 3.0 * n * t) / n;
    phi(2, 2) = c;
    phi(2, 5) = s / n;
    // Velocity rows.
    phi(3, 0) = 3.0 * n * s;
    phi(3, 3) = c;
    phi(3, 4) = 2.0 * s;
    phi(4, 0) = -6.0 * n * (1.0 - c);
    phi(4, 3) = -2.0 * s;
    phi(4, 4) = 4.0 * c - 3.0;
    phi(5, 2) = -n * s;
    phi(5, 5) = c;
    return phi;
}

double wrap_angle(double a) {
    constexpr double pi = std::numbers::pi;
    a = std::remainder(a, 2.0 * pi);  // [-pi, pi]
    return a == -pi ? pi : a;
}

Eigen::Vector2d cw_angles(const Eigen::VectorXd& state) {
    if (state.size() < 3) throw DimensionMismatch("cw_angles: state needs a position");
    const double x = state(0), y = state(1), z = state(2);
    const double rho = std::hypot(x, y);
    const double r = std::sqrt(x * x + y * y + z * z);
    if (!(r > 0.0) || !(rho > 0.0)) throw DegenerateGeometry("cw_angles: position on the z-axis or at the origin");
    return {wrap_angle(std::atan2(y, x)), std::asin(std::clamp(z / r, -1.0, 1.0))};
}

Vector6d cr3bp_halo_state() {
    Vector6d x;
    x << 0.87592140310093525, -1.59031517986629e-26, 0.19175810982939320, -2.93025310878967e-14,
        0.23080031482213192, 7.3649704261223776e-14;
    return x;
}

Vector6d cr3bp_deriv(const Vector6d& s, const CR3BPParams& p) {
    const double mu = p.mu;
    const double x = s(0), y = s(1), z = s(2);
    const double dx1 = x + mu, dx2 = x - 1.0 + mu;
    const double r1sq = dx1 * dx1 + y * y + z * z;
    const double r2sq = dx2 * dx2 + y * y + z * z;
    if (r1sq < 1e-24 || r2sq < 1e-24) throw SingularPotential("cr3bp_deriv: state at a primary");
    const double r1 = std::sqrt(r1sq), r2 = std::sqrt(r2sq);
    const double g1 = (1.0 - mu) / (r1sq * r1);
    const double g2 = mu / (r2sq * r2);
    Vector6d d;
    d.head<3>() = s.tail<3>();
    d(3) = 2.0 * s(4) + x - g1 * dx1 - g2 * dx2;
    d(4) = -2.0 * s(3) + y - g1 * y - g2 * y;
    d(5) = -g1 * z - g2 * z;
    return d;
}

double cr3bp_energy(const Vector6d& s, const CR3BPParams& p) {
    const double mu = p.mu;
    const double r1 = std::sqrt((s(0) + mu) * (s(0) + mu) + s(1) * s(1) + s(2) * s(2));
    const double r2 = std::sqrt((s(0) - 1.0 + mu) * (s(0) - 1.0 + mu) + s(1) * s(1) + s(2) * s(2));
    return 0.5 * s.tail<3>().squaredNorm() - 0.5 * (s(0) * s(0) + s(1) * s(1)) - (1.0 - mu) / r1 - mu / r2;
}

Eigen::Vector2d range_rangerate(const Eigen::VectorXd& state) {
    if (state.size() < 6) throw DimensionMismatch("range_rangerate: state needs position and velocity");
    const Eigen::Vector3d r = state.head<3>();
    const Eigen::Vector3d v = state.segment<3>(3);
    const double rho = r.norm();
    if (!(rho > 0.0)) throw DegenerateGeometry("range_rangerate: position at the origin");
    return {rho, r.dot(v) / rho};
}

double scalar_arctan(double x) { return std::atan(x); }

Eigen::VectorXd CWDynamics::propagate(const Eigen::VectorXd& x, double, double dt) const {
    if (x.size() != 6) throw DimensionMismatch("CWDynamics: state must have 6 entries");
    return cw_stm(n_, dt) * x;
}

Eigen::MatrixXd CWDynamics::noise_gain() const {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(6, 3);
    G.bottomRows(3).setIdentity();
    return G;
}

Eigen::VectorXd AnglesMeasurement::residual(const Eigen::VectorXd& y, const Eigen::VectorXd& ref) const {
    Eigen::VectorXd d = y - ref;
    d(0) = wrap_angle(d(0));
    return d;
}

Eigen::VectorXd CR3BPDynamics::propagate(const Eigen::VectorXd& x, double t, double dt) const {
    if (x.size() != 6) throw DimensionMismatch("CR3BPDynamics: state must have 6 entries");
    const Vector6d x0 = x;
    const auto rhs = [this](double, const Vector6d& s) { return cr3bp_deriv(s, params_); };
    return integrate(rhs, x0, t, t + dt, settings_);
}

Eigen::MatrixXd CR3BPDynamics::noise_gain() const {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(6, 3);
    G.bottomRows(3).setIdentity();
    return G;
}

} // namespace polyfilter
