// Predict/update cycles composing sigma rules, models and the polynomial
// update into the named filter variants (UKF, QUKF, QAUKF, QACUKF-4, ...).
#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>

#include "polyfilter/kron_tensor.hpp"
#include "polyfilter/moments.hpp"
#include "polyfilter/poly_update.hpp"
#include "polyfilter/sigma_points.hpp"

namespace polyfilter {

struct GaussianState {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    double epoch = 0.0;
};

struct SigmaRule {
    RuleKind kind = RuleKind::UT;
    UTParams ut;

    static SigmaRule unscented(const UTParams& params = {}) { return {RuleKind::UT, params}; }
    static SigmaRule conjugate(int order) { return {cut_kind(order), {}}; }
};

/// Point set of the rule for N(mean, cov).
SigmaSet generate_points(const SigmaRule& rule, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

struct FilterConfig {
    int update_order = 1;
    SigmaRule rule;
    NoiseMode noise_mode = NoiseMode::Additive;
    /// Feed the propagated points to the measurement map instead of
    /// regenerating a set from the predicted Gaussian.
    bool reuse_propagated_points = false;
    PsdPolicy psd;
    SolvePolicy solve;

    /// "[order][A][U|CU]KF[-c]", e.g. UKF, QUKF, QAUKF, QACUKF-4, CACUKF-6, P4AUKF.
    std::string name() const;
    static FilterConfig from_name(const std::string& name);
    /// Throws AdditiveOrderUnsupported or UnsupportedOrder.
    void validate() const;
};

/// x_k = f(x_{k-1}, mu_{k-1}); the default noisy map is f(x) + G mu.
class DynamicsModel {
public:
    virtual ~DynamicsModel() = default;
    virtual int state_dim() const = 0;
    virtual int noise_dim() const = 0;
    virtual Eigen::VectorXd propagate(const Eigen::VectorXd& x, double t, double dt) const = 0;
    virtual Eigen::MatrixXd noise_gain() const = 0;
    virtual Eigen::VectorXd propagate(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, double t,
                                      double dt) const {
        return propagate(x, t, dt) + noise_gain() * mu;
    }
};

/// y = h(x, eta); the default noisy map is h(x) + eta.
class MeasurementModel {
public:
    virtual ~MeasurementModel() = default;
    virtual int meas_dim() const = 0;
    virtual Eigen::VectorXd measure(const Eigen::VectorXd& x) const = 0;
    virtual Eigen::VectorXd measure(const Eigen::VectorXd& x, const Eigen::VectorXd& eta) const {
        return measure(x) + eta;
    }
    /// Difference y - ref, e.g. wrapped for angles.
    virtual Eigen::VectorXd residual(const Eigen::VectorXd& y, const Eigen::VectorXd& ref) const {
        return y - ref;
    }
};

/// Transformed points retained from a prediction for reuse in the update.
struct PropagatedPoints {
    SigmaSet set;                    // weights (points are the pre-propagation set)
    Eigen::MatrixXd state;           // n_x x P propagated state points
    Eigen::MatrixXd meas_noise;      // n_eta x P (augmented mode only)
};

GaussianState predict(const GaussianState& state, const DynamicsModel& model, const NoiseMoments& process,
                      const FilterConfig& cfg, double dt, PropagatedPoints* keep = nullptr,
                      const NoiseMoments* meas_noise = nullptr);

GaussianState do_update(const GaussianState& prior, const MeasurementModel& model, const NoiseMoments& meas_noise,
                        const FilterConfig& cfg, const Eigen::VectorXd& measured_y,
                        const PropagatedPoints* reuse = nullptr);

GaussianState step(const GaussianState& state, const DynamicsModel& dynamics, const MeasurementModel& measurement,
                   const NoiseMoments& process, const NoiseMoments& meas_noise, const FilterConfig& cfg, double dt,
                   const std::optional<Eigen::VectorXd>& measured_y);

/// Stateful wrapper owning the estimate; models are borrowed.
class Filter {
public:
    Filter(FilterConfig cfg, const DynamicsModel& dynamics, const MeasurementModel& measurement,
           NoiseMoments process, NoiseMoments meas_noise, GaussianState initial);

    void predict(double dt);
    void update(const Eigen::VectorXd& measured_y);

    const GaussianState& state() const { return state_; }
    const FilterConfig& config() const { return cfg_; }

private:
    FilterConfig cfg_;
    const DynamicsModel* dynamics_;
    const MeasurementModel* measurement_;
    NoiseMoments process_;
    NoiseMoments meas_noise_;
    GaussianState state_;
    std::optional<PropagatedPoints> points_;
};

} // namespace polyfilter
