#include "polyfilter/filter.hpp"

#include <cctype>
#include <string>

#include "polyfilter/errors.hpp"

namespace polyfilter {

SigmaSet generate_points(const SigmaRule& rule, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    if (rule.kind == RuleKind::UT) return ut_points(mean, cov, rule.ut);
    return scale_points(cut_points(static_cast<int>(mean.size()), cut_order(rule.kind)), mean, cov);
}

std::string FilterConfig::name() const {
    std::string out;
    switch (update_order) {
    case 1: break;
    case 2: out = "Q"; break;
    case 3: out = "C"; break;
    default: out = "P" + std::to_string(update_order); break;
    }
    if (noise_mode == NoiseMode::Augmented) out += "A";
    out += rule.kind == RuleKind::UT ? "UKF" : "CUKF-" + std::to_string(cut_order(rule.kind));
    return out;
}

FilterConfig FilterConfig::from_name(const std::string& name) {
    auto fail = [&]() -> FilterConfig { throw ConfigError("unrecognized filter name '" + name + "'"); };
    FilterConfig cfg;
    std::size_t pos = 0;
    if (name.compare(pos, 1, "Q") == 0) {
        cfg.update_order = 2;
        pos = 1;
    } else if (name.compare(pos, 1, "C") == 0 && name.compare(0, 4, "CUKF") != 0) {
        cfg.update_order = 3;
        pos = 1;
    } else if (name.compare(pos, 1, "P") == 0) {
        pos = 1;
        std::size_t end = pos;
        while (end < name.size() && std::isdigit(static_cast<unsigned char>(name[end]))) ++end;
        if (end == pos) return fail();
        cfg.update_order = std::stoi(name.substr(pos, end - pos));
        pos = end;
    }
    if (name.compare(pos, 1, "A") == 0) {
        cfg.noise_mode = NoiseMode::Augmented;
        ++pos;
    }
    const std::string rest = name.substr(pos);
    if (rest == "UKF") {
        cfg.rule = SigmaRule::unscented();
    } else if (rest.size() == 6 && rest.compare(0, 5, "CUKF-") == 0 && std::isdigit(static_cast<unsigned char>(rest[5]))) {
        try {
            cfg.rule = SigmaRule::conjugate(rest[5] - '0');
        } catch (const UnsupportedOrder&) {
            return fail();
        }
    } else {
        return fail();
    }
    cfg.validate();
    return cfg;
}

void FilterConfig::validate() const {
    if (update_order < 1) throw UnsupportedOrder("update order must be >= 1");
    if (noise_mode == NoiseMode::Additive && update_order > 2)
        throw AdditiveOrderUnsupported(name() + ": additive noise handling supports order <= 2 only");
    if (rule.kind == RuleKind::UT && !(rule.ut.alpha > 0.0)) throw InvalidArgument("UT alpha must be positive");
}

namespace {

Eigen::MatrixXd propagate_points(const DynamicsModel& model, const Eigen::MatrixXd& X, const Eigen::MatrixXd* mu,
                                 double t, double dt) {
    Eigen::MatrixXd out(model.state_dim(), X.cols());
    try {
        for (Eigen::Index i = 0; i < X.cols(); ++i)
            out.col(i) = mu ? model.propagate(X.col(i), mu->col(i), t, dt) : model.propagate(X.col(i), t, dt);
    } catch (const PredictFailure&) {
        throw;
    } catch (const NumericalError& e) {
        throw PredictFailure(std::string("sigma point propagation failed: ") + e.what());
    }
    if (!out.allFinite()) throw PredictFailure("sigma point propagation produced non-finite values");
    return out;
}

} // namespace

GaussianState predict(const GaussianState& state, const DynamicsModel& model, const NoiseMoments& process,
                      const FilterConfig& cfg, double dt, PropagatedPoints* keep, const NoiseMoments* meas_noise) {
    cfg.validate();
    const int nx = model.state_dim();
    const int nmu = model.noise_dim();
    if (state.mean.size() != nx || state.cov.rows() != nx) throw DimensionMismatch("predict: state dimension");
    if (process.dim != nmu) throw DimensionMismatch("predict: process noise dimension");
    if (dt == 0.0) return state;

    const bool augmented = cfg.noise_mode == NoiseMode::Augmented;
    const bool carry_eta = keep && augmented && meas_noise;
    SigmaSet set;
    Eigen::MatrixXd X;
    Eigen::MatrixXd mu;
    if (augmented) {
        const Eigen::MatrixXd Reta = carry_eta ? meas_noise->cov : Eigen::MatrixXd(0, 0);
        const AugmentedPrior aug = augment(state.mean, state.cov, process.cov, Reta);
        set = generate_points(cfg.rule, aug.mean, aug.cov);
        mu = set.points.middleRows(nx, nmu);
        X = propagate_points(model, set.points.topRows(nx), &mu, state.epoch, dt);
        if (carry_eta) {
            keep->meas_noise = set.points.bottomRows(aug.meas_dim);
        }
    } else {
        set = generate_points(cfg.rule, state.mean, state.cov);
        X = propagate_points(model, set.points, nullptr, state.epoch, dt);
    }

    GaussianState out;
    out.epoch = state.epoch + dt;
    out.mean = weighted_mean(set, X);
    const Eigen::MatrixXd dev = X.colwise() - out.mean;
    Eigen::MatrixXd cov = weighted_cov(set, dev, dev);
    if (!augmented) {
        const Eigen::MatrixXd G = model.noise_gain();
        cov += G * process.cov * G.transpose();
    }
    out.cov = enforce_psd(cov, cfg.psd);
    if (keep) {
        keep->set = std::move(set);
        keep->state = std::move(X);
        if (!carry_eta) keep->meas_noise.resize(0, 0);
    }
    return out;
}

GaussianState do_update(const GaussianState& prior, const MeasurementModel& model, const NoiseMoments& meas_noise,
                        const FilterConfig& cfg, const Eigen::VectorXd& measured_y, const PropagatedPoints* reuse) {
    cfg.validate();
    const int m = model.meas_dim();
    if (measured_y.size() != m || meas_noise.dim != m) throw DimensionMismatch("do_update: measurement dimension");
    const Eigen::Index nx = prior.mean.size();
    const bool augmented = cfg.noise_mode == NoiseMode::Augmented;
    if (reuse && augmented && reuse->meas_noise.rows() != m) reuse = nullptr;

    SigmaSet set;
    Eigen::MatrixXd X;
    Eigen::MatrixXd eta;
    if (reuse) {
        set = reuse->set;
        X = reuse->state;
        if (augmented) eta = reuse->meas_noise;
    } else if (augmented) {
        const AugmentedPrior aug =
            augment(prior.mean, prior.cov, Eigen::MatrixXd(0, 0), meas_noise.cov);
        set = generate_points(cfg.rule, aug.mean, aug.cov);
        X = set.points.topRows(nx);
        eta = set.points.bottomRows(m);
    } else {
        set = generate_points(cfg.rule, prior.mean, prior.cov);
        X = set.points;
    }

    Eigen::MatrixXd Y(m, set.size());
    for (Eigen::Index i = 0; i < set.size(); ++i)
        Y.col(i) = augmented ? model.measure(X.col(i), eta.col(i)) : model.measure(X.col(i));
    // Unwrap every point against the first so the mean is taken on one branch.
    const Eigen::VectorXd ref = Y.col(0);
    for (Eigen::Index i = 1; i < Y.cols(); ++i) Y.col(i) = ref + model.residual(Y.col(i), ref);

    const Eigen::VectorXd y_hat = weighted_mean(set, Y);
    const Eigen::MatrixXd dy = Y.colwise() - y_hat;
    const Eigen::MatrixXd dx = X.colwise() - prior.mean;

    const Assembly asm_ = assemble(set, dx, dy, cfg.update_order, cfg.noise_mode, augmented ? nullptr : &meas_noise);
    const GainBlocks gain = solve_gain(asm_.moments, asm_.basis, cfg.solve);
    const Posterior post =
        update(prior.mean, prior.cov, gain, asm_.moments, asm_.basis, model.residual(measured_y, y_hat), cfg.psd);
    return {post.mean, post.cov, prior.epoch};
}

GaussianState step(const GaussianState& state, const DynamicsModel& dynamics, const MeasurementModel& measurement,
                   const NoiseMoments& process, const NoiseMoments& meas_noise, const FilterConfig& cfg, double dt,
                   const std::optional<Eigen::VectorXd>& measured_y) {
    PropagatedPoints points;
    const bool reuse = cfg.reuse_propagated_points && dt != 0.0;
    GaussianState predicted =
        predict(state, dynamics, process, cfg, dt, reuse ? &points : nullptr, reuse ? &meas_noise : nullptr);
    if (!measured_y) return predicted;
    return do_update(predicted, measurement, meas_noise, cfg, *measured_y, reuse ? &points : nullptr);
}

Filter::Filter(FilterConfig cfg, const DynamicsModel& dynamics, const MeasurementModel& measurement,
               NoiseMoments process, NoiseMoments meas_noise, GaussianState initial)
    : cfg_(std::move(cfg)),
      dynamics_(&dynamics),
      measurement_(&measurement),
      process_(std::move(process)),
      meas_noise_(std::move(meas_noise)),
      state_(std::move(initial)) {
    cfg_.validate();
}

void Filter::predict(double dt) {
    points_.reset();
    if (cfg_.reuse_propagated_points && dt != 0.0) {
        PropagatedPoints kept;
        state_ = polyfilter::predict(state_, *dynamics_, process_, cfg_, dt, &kept, &meas_noise_);
        points_ = std::move(kept);
    } else {
        state_ = polyfilter::predict(state_, *dynamics_, process_, cfg_, dt);
    }
}

void Filter::update(const Eigen::VectorXd& measured_y) {
    state_ = do_update(state_, *measurement_, meas_noise_, cfg_, measured_y, points_ ? &*points_ : nullptr);
    points_.reset();
}

} // namespace polyfilter
