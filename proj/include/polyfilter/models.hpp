// Truth and filter models: scalar arctan, Clohessy-Wiltshire relative motion
// with angle measurements, CR3BP dynamics with range/range-rate tracking, and
// an adaptive Dormand-Prince 5(4) integrator.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "polyfilter/errors.hpp"
#include "polyfilter/filter.hpp"

namespace polyfilter {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Clohessy-Wiltshire.

struct CWParams {
    double semi_major_axis = 7000.0;    // km
    double grav_param = 398600.4418;    // km^3/s^2

    double mean_motion() const { return std::sqrt(grav_param / (semi_major_axis * semi_major_axis * semi_major_axis)); }
};

/// Closed-form transition matrix for state (x, y, z, vx, vy, vz).
Matrix6d cw_stm(double mean_motion, double dt);

/// (azimuth, elevation) = (atan2(y, x), asin(z / |r|)). Throws DegenerateGeometry.
Eigen::Vector2d cw_angles(const Eigen::VectorXd& state);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

// Circular restricted three-body problem (rotating barycentric frame, normalized units).

struct CR3BPParams {
    double mu = 1.215058560962404e-2;
    double period = 2.1783120807931518;  // TU, halo orbit period
};

/// Halo-orbit initial state shipped with the CR3BP scenario.
Vector6d cr3bp_halo_state();

/// Throws SingularPotential when the state is within 1e-12 of a primary.
Vector6d cr3bp_deriv(const Vector6d& state, const CR3BPParams& params);

/// E = v^2/2 - (x^2 + y^2)/2 - (1 - mu)/r1 - mu/r2.
double cr3bp_energy(const Vector6d& state, const CR3BPParams& params);

/// (range, range rate) from the origin. Throws DegenerateGeometry.
Eigen::Vector2d range_rangerate(const Eigen::VectorXd& state);

double scalar_arctan(double x);

// Integration.

struct IntegratorSettings {
    double rel_tol = 1e-12;
    double abs_tol = 1e-12;
    double max_step_fraction = 1.0;  // of |t1 - t0|
    long max_steps = 1000000;
};

struct IntegrationStats {
    long accepted = 0;
    long rejected = 0;
};

/// Dormand-Prince 5(4) with PI step-size control. deriv(t, x) -> dx/dt.
/// Throws StepUnderflow when the step collapses or the budget runs out.
template <typename State, typename Deriv>
State integrate(Deriv&& deriv, const State& x0, double t0, double t1, const IntegratorSettings& s = {},
                IntegrationStats* stats = nullptr) {
    if (!(s.rel_tol > 0.0) || !(s.abs_tol > 0.0)) throw InvalidArgument("integrate: tolerances must be positive");
    if (t1 < t0) throw InvalidArgument("integrate: t1 must not precede t0");
    if (t1 == t0) return x0;

    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double span = t1 - t0;
    const double h_max = s.max_step_fraction * span;
    State x = x0;
    State k1 = deriv(t0, x);
    double t = t0;

    // Starting step from the scale of the state and its derivative.
    auto scaled_norm = [&](const State& v, const State& ref) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double sc = s.abs_tol + s.rel_tol * std::abs(ref(i));
            acc += (v(i) / sc) * (v(i) / sc);
        }
        return std::sqrt(acc / static_cast<double>(v.size()));
    };
    const double d0 = scaled_norm(x, x), d1 = scaled_norm(k1, x);
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
    h = std::min({h, h_max, span});
    double err_prev = 1e-4;

    for (long n = 0; n < s.max_steps; ++n) {
        const bool last = t + 1.01 * h >= t1;
        if (last) h = t1 - t;
        const State k2 = deriv(t + c2 * h, State(x + h * a21 * k1));
        const State k3 = deriv(t + c3 * h, State(x + h * (a31 * k1 + a32 * k2)));
        const State k4 = deriv(t + c4 * h, State(x + h * (a41 * k1 + a42 * k2 + a43 * k3)));
        const State k5 = deriv(t + c5 * h, State(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
        const State k6 = deriv(t + h, State(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
        const State xn = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const State k7 = deriv(t + h, xn);
        const State err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double acc = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double sc = s.abs_tol + s.rel_tol * std::max(std::abs(x(i)), std::abs(xn(i)));
            acc += (err_vec(i) / sc) * (err_vec(i) / sc);
        }
        const double err = std::sqrt(acc / static_cast<double>(x.size()));
        if (!std::isfinite(err)) throw StepUnderflow("integrate: non-finite error estimate");

        if (err <= 1.0) {
            t = last ? t1 : t + h;
            x = xn;
            k1 = k7;  // first-same-as-last
            if (stats) ++stats->accepted;
            if (last) return x;
            const double e = std::max(err, 1e-10);
            const double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
            h *= std::clamp(fac, 0.2, 5.0);
            err_prev = e;
        } else {
            if (stats) ++stats->rejected;
            h *= std::max(0.2, 0.9 * std::pow(err, -1.0 / 5.0));
        }
        h = std::min(h, h_max);
        if (h < 1e-14 * std::max(1.0, std::abs(t))) throw StepUnderflow("integrate: step size underflow");
    }
    throw StepUnderflow("integrate: step budget exhausted");
}

// Filter-facing model classes.

/// Linear CW propagation; process noise enters the velocity states.
class CWDynamics final : public DynamicsModel {
public:
    explicit CWDynamics(CWParams params = {}) : params_(params), n_(params.mean_motion()) {}
    int state_dim() const override { return 6; }
    int noise_dim() const override { return 3; }
    Eigen::VectorXd propagate(const Eigen::VectorXd& x, double t, double dt) const override;
    using DynamicsModel::propagate;
    Eigen::MatrixXd noise_gain() const override;
    const CWParams& params() const { return params_; }

private:
    CWParams params_;
    double n_;
};

/// Azimuth/elevation with the azimuth residual wrapped to (-pi, pi].
class AnglesMeasurement final : public MeasurementModel {
public:
    int meas_dim() const override { return 2; }
    Eigen::VectorXd measure(const Eigen::VectorXd& x) const override { return cw_angles(x); }
    Eigen::VectorXd residual(const Eigen::VectorXd& y, const Eigen::VectorXd& ref) const override;
};

/// CR3BP flow over dt followed by a velocity kick mu.
class CR3BPDynamics final : public DynamicsModel {
public:
    explicit CR3BPDynamics(CR3BPParams params = {}, IntegratorSettings settings = {})
        : params_(params), settings_(settings) {}
    int state_dim() const override { return 6; }
    int noise_dim() const override { return 3; }
    Eigen::VectorXd propagate(const Eigen::VectorXd& x, double t, double dt) const override;
    using DynamicsModel::propagate;
    Eigen::MatrixXd noise_gain() const override;
    const CR3BPParams& params() const { return params_; }

private:
    CR3BPParams params_;
    IntegratorSettings settings_;
};

class RangeRateMeasurement final : public MeasurementModel {
public:
    int meas_dim() const override { return 2; }
    Eigen::VectorXd measure(const Eigen::VectorXd& x) const override { return range_rangerate(x); }
};

/// Static scalar state (x_k = x_{k-1} + mu).
class StaticScalarDynamics final : public DynamicsModel {
public:
    int state_dim() const override { return 1; }
    int noise_dim() const override { return 1; }
    Eigen::VectorXd propagate(const Eigen::VectorXd& x, double, double) const override { return x; }
    Eigen::MatrixXd noise_gain() const override { return Eigen::MatrixXd::Identity(1, 1); }
};

class ArctanMeasurement final : public MeasurementModel {
public:
    int meas_dim() const override { return 1; }
    Eigen::VectorXd measure(const Eigen::VectorXd& x) const override {
        return Eigen::VectorXd::Constant(1, scalar_arctan(x(0)));
    }
};

} // namespace polyfilter
