#include "doctest.h"

#include <cmath>
#include <random>

#include "polyfilter/errors.hpp"
#include "polyfilter/filter.hpp"
#include "reference_ukf.hpp"
#include "test_models.hpp"
#include "test_util.hpp"

using namespace polyfilter;
using testutil::max_abs;
using testutil::max_abs_diff;

namespace {

GaussianState gaussian(const Eigen::VectorXd& m, const Eigen::MatrixXd& P) { return {m, P, 0.0}; }

const char* kAllNames[] = {"UKF",     "QUKF",     "QAUKF",     "CAUKF",     "P4AUKF",   "CUKF-4",
                           "QCUKF-4", "QACUKF-4", "CACUKF-6",  "ACUKF-8",   "P5ACUKF-8"};

} // namespace

TEST_CASE("filter names parse and print back") {
    for (const char* n : kAllNames) {
        CAPTURE(n);
        CHECK(FilterConfig::from_name(n).name() == n);
    }
    const FilterConfig q = FilterConfig::from_name("QACUKF-4");
    CHECK(q.update_order == 2);
    CHECK(q.noise_mode == NoiseMode::Augmented);
    CHECK(q.rule.kind == RuleKind::CUT4);
    const FilterConfig c = FilterConfig::from_name("CUKF-6");
    CHECK(c.update_order == 1);
    CHECK(c.noise_mode == NoiseMode::Additive);
    CHECK(FilterConfig::from_name("CACUKF-6").update_order == 3);
    CHECK(FilterConfig::from_name("P4AUKF").update_order == 4);

    for (const char* bad : {"", "XUKF", "CUKF", "CUKF-5", "QUKF-4", "QAUK", "PAUKF", "ukf"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(FilterConfig::from_name(bad), ConfigError);
    }
    CHECK_THROWS_AS(FilterConfig::from_name("CUKF-5"), InputError);
    CHECK_THROWS_AS(FilterConfig::from_name("CCUKF-4"), AdditiveOrderUnsupported);
    CHECK_THROWS_AS(FilterConfig::from_name("P4UKF"), AdditiveOrderUnsupported);
}

TEST_CASE("generate_points follows the rule") {
    const Eigen::VectorXd m = Eigen::VectorXd::Zero(3);
    const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(3, 3);
    CHECK(generate_points(SigmaRule::unscented(), m, P).size() == 7);
    CHECK(generate_points(SigmaRule::conjugate(4), m, P).size() == cut_points(3, 4).size());
    CHECK(generate_points(SigmaRule::conjugate(8), m, P).rule == RuleKind::CUT8);
}

TEST_CASE("linear prediction is exact for every rule and noise mode") {
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd F = testutil::random_matrix(3, 3, rng);
    const Eigen::MatrixXd G = testutil::random_matrix(3, 2, rng);
    const Eigen::MatrixXd Q = testutil::random_spd(2, rng);
    const testutil::LinearDynamics dyn(F, G);
    const Eigen::VectorXd m = testutil::random_matrix(3, 1, rng);
    const Eigen::MatrixXd P = testutil::random_spd(3, rng);
    const NoiseMoments process = gaussian_moments(Q);
    for (const char* name : {"UKF", "QAUKF", "CUKF-4", "QACUKF-4", "CACUKF-6", "ACUKF-8"}) {
        CAPTURE(name);
        const GaussianState out = predict(gaussian(m, P), dyn, process, FilterConfig::from_name(name), 1.0);
        CHECK(max_abs_diff(out.mean, F * m) <= 1e-12);
        CHECK(max_abs_diff(out.cov, F * P * F.transpose() + G * Q * G.transpose()) <= 1e-10);
        CHECK(out.epoch == 1.0);
    }
    const testutil::LinearDynamics identity(Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Zero(3, 2));
    const GaussianState same = predict(gaussian(m, P), identity, gaussian_moments(Eigen::MatrixXd::Zero(2, 2)),
                                       FilterConfig::from_name("UKF"), 1.0);
    CHECK(max_abs_diff(same.mean, m) <= 1e-14);
    CHECK(max_abs_diff(same.cov, P) <= 1e-13);
    const GaussianState frozen = predict(gaussian(m, P), dyn, process, FilterConfig::from_name("UKF"), 0.0);
    CHECK(frozen.mean == m);
    CHECK(frozen.cov == P);
}

TEST_CASE("first-order additive UT matches the reference UKF") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + trial % 4;
        const int m = 1 + trial % 2;
        const Eigen::MatrixXd A = 0.5 * testutil::random_matrix(n, n, rng);
        const Eigen::MatrixXd G = testutil::random_matrix(n, n, rng);
        const Eigen::MatrixXd Q = 0.1 * testutil::random_spd(n, rng);
        const Eigen::MatrixXd C = testutil::random_matrix(m, n, rng);
        const Eigen::MatrixXd R = 0.1 * testutil::random_spd(m, rng);
        auto f = [A](const Eigen::VectorXd& x) {
            return Eigen::VectorXd(x + 0.1 * (A * x).array().sin().matrix() + 0.05 * x.array().square().matrix());
        };
        auto h = [C](const Eigen::VectorXd& x) { return Eigen::VectorXd((C * x).array().atan().matrix() + 0.1 * (C * x).array().cube().matrix()); };
        const Eigen::VectorXd x0 = testutil::random_matrix(n, 1, rng);
        const Eigen::MatrixXd P0 = testutil::random_spd(n, rng);
        const Eigen::VectorXd y = testutil::random_matrix(m, 1, rng);

        refukf::Params p;
        p.kappa = 3.0 - n;
        const refukf::Estimate pred = refukf::predict({x0, P0}, f, G, Q, p);
        const refukf::Estimate post = refukf::update(pred, h, R, y, p);

        const testutil::FunctionDynamics dyn(f, G);
        const testutil::FunctionMeasurement meas(h, m);
        const FilterConfig cfg = FilterConfig::from_name("UKF");
        const GaussianState lp = predict(gaussian(x0, P0), dyn, gaussian_moments(Q), cfg, 1.0);
        CHECK(max_abs_diff(lp.mean, pred.x) <= 1e-10);
        CHECK(max_abs_diff(lp.cov, pred.P) <= 1e-10);
        const GaussianState lu = do_update(lp, meas, gaussian_moments(R), cfg, y);
        CHECK(max_abs_diff(lu.mean, post.x) <= 1e-10);
        CHECK(max_abs_diff(lu.cov, post.P) <= 1e-10);
    }
}

TEST_CASE("scalar linear-Gaussian update") {
    const testutil::FunctionMeasurement meas = testutil::linear_measurement(Eigen::MatrixXd::Identity(1, 1));
    const NoiseMoments R = gaussian_moments(Eigen::MatrixXd::Identity(1, 1));
    for (const char* name : {"UKF", "QUKF", "QAUKF", "CUKF-4", "QCUKF-4", "QACUKF-4", "CACUKF-6"}) {
        CAPTURE(name);
        const GaussianState post =
            do_update(gaussian(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)), meas, R,
                      FilterConfig::from_name(name), Eigen::VectorXd::Constant(1, 1.0));
        CHECK(post.mean(0) == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(post.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
    }
}

TEST_CASE("zero innovation leaves a first-order mean unchanged and shrinks the covariance") {
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd H = testutil::random_matrix(2, 3, rng);
    const testutil::FunctionMeasurement meas = testutil::linear_measurement(H);
    const Eigen::VectorXd m = testutil::random_matrix(3, 1, rng);
    const Eigen::MatrixXd P = testutil::random_spd(3, rng);
    const NoiseMoments R = gaussian_moments(testutil::random_spd(2, rng));
    for (const char* name : {"UKF", "CUKF-4", "ACUKF-6"}) {
        const GaussianState post = do_update(gaussian(m, P), meas, R, FilterConfig::from_name(name), H * m);
        CHECK(max_abs_diff(post.mean, m) <= 1e-12);
        CHECK(post.cov.trace() <= P.trace());
    }
    for (const char* name : {"QUKF", "QACUKF-4", "CACUKF-6"}) {
        CAPTURE(name);
        const GaussianState post = do_update(gaussian(m, P), meas, R, FilterConfig::from_name(name), H * m);
        CHECK(post.cov.trace() <= P.trace() + 1e-12);
        const testutil::KalmanPosterior k = testutil::kalman_update(m, P, H, R.cov, H * m);
        CHECK(max_abs_diff(post.cov, k.cov) <= 1e-8);
    }
}

TEST_CASE("step without a measurement is a prediction") {
    std::mt19937_64 rng(6);
    const testutil::LinearDynamics dyn(testutil::random_matrix(2, 2, rng), Eigen::MatrixXd::Identity(2, 2));
    const testutil::FunctionMeasurement meas = testutil::linear_measurement(Eigen::MatrixXd::Identity(2, 2));
    const NoiseMoments Q = gaussian_moments(0.01 * Eigen::MatrixXd::Identity(2, 2));
    const NoiseMoments R = gaussian_moments(0.1 * Eigen::MatrixXd::Identity(2, 2));
    const FilterConfig cfg = FilterConfig::from_name("QUKF");
    const GaussianState s0 = gaussian(Eigen::VectorXd::Ones(2), Eigen::MatrixXd::Identity(2, 2));
    const GaussianState a = step(s0, dyn, meas, Q, R, cfg, 2.0, std::nullopt);
    const GaussianState b = predict(s0, dyn, Q, cfg, 2.0);
    CHECK(a.mean == b.mean);
    CHECK(a.cov == b.cov);
    CHECK(a.epoch == 2.0);
}

TEST_CASE("reusing propagated points agrees with regeneration for linear dynamics") {
    std::mt19937_64 rng(10);
    const Eigen::MatrixXd F = Eigen::MatrixXd::Identity(3, 3) + 0.1 * testutil::random_matrix(3, 3, rng);
    const testutil::LinearDynamics dyn(F, Eigen::MatrixXd::Zero(3, 1));
    const Eigen::MatrixXd H = testutil::random_matrix(1, 3, rng);
    const testutil::FunctionMeasurement meas = testutil::linear_measurement(H);
    const NoiseMoments Q = gaussian_moments(Eigen::MatrixXd::Zero(1, 1));
    const NoiseMoments R = gaussian_moments(Eigen::MatrixXd::Constant(1, 1, 0.2));
    const GaussianState s0 = gaussian(testutil::random_matrix(3, 1, rng), testutil::random_spd(3, rng));
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 0.3);
    for (const char* name : {"UKF", "QUKF", "QACUKF-4", "CACUKF-6"}) {
        CAPTURE(name);
        FilterConfig regen = FilterConfig::from_name(name);
        FilterConfig reuse = regen;
        reuse.reuse_propagated_points = true;
        const GaussianState a = step(s0, dyn, meas, Q, R, regen, 1.0, y);
        const GaussianState b = step(s0, dyn, meas, Q, R, reuse, 1.0, y);
        CHECK(max_abs_diff(a.mean, b.mean) <= 1e-9);
        CHECK(max_abs_diff(a.cov, b.cov) <= 1e-9);
    }
}

TEST_CASE("Filter wrapper matches the free functions") {
    std::mt19937_64 rng(12);
    const testutil::FunctionDynamics dyn(
        [](const Eigen::VectorXd& x) {
            Eigen::VectorXd out(2);
            out << x(0) + 0.1 * x(1), x(1) - 0.1 * std::sin(x(0));
            return out;
        },
        Eigen::MatrixXd::Identity(2, 2));
    const testutil::FunctionMeasurement meas(
        [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, std::atan2(x(1), x(0) + 2.0)); }, 1);
    const NoiseMoments Q = gaussian_moments(1e-4 * Eigen::MatrixXd::Identity(2, 2));
    const NoiseMoments R = gaussian_moments(Eigen::MatrixXd::Constant(1, 1, 1e-3));
    const GaussianState s0 = gaussian(Eigen::VectorXd::Constant(2, 0.2), 0.05 * Eigen::MatrixXd::Identity(2, 2));
    const FilterConfig cfg = FilterConfig::from_name("QACUKF-4");
    Filter filt(cfg, dyn, meas, Q, R, s0);
    GaussianState ref = s0;
    for (int k = 0; k < 5; ++k) {
        const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 0.1 * k);
        filt.predict(0.5);
        filt.update(y);
        ref = step(ref, dyn, meas, Q, R, cfg, 0.5, y);
        CHECK(max_abs_diff(filt.state().mean, ref.mean) <= 1e-14);
        CHECK(max_abs_diff(filt.state().cov, ref.cov) <= 1e-14);
    }
    CHECK(filt.config().name() == "QACUKF-4");
    CHECK(filt.state().epoch == doctest::Approx(2.5));
}
