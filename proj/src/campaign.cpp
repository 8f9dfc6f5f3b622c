#include "polyfilter/campaign.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>

#include "polyfilter/errors.hpp"

namespace polyfilter {

bool MCResult::excluded(std::size_t filter, int run) const {
    const FilterRun& r = data[filter][run];
    return r.failed || (exclude_diverged && r.diverged);
}

TruthRun simulate_truth(const Scenario& sc, int run) {
    const auto dyn = sc.make_dynamics();
    const auto meas = sc.make_measurement();
    std::mt19937_64 rng(run_seed(sc.base_seed, static_cast<std::uint64_t>(run)));

    const auto nx = sc.initial_mean.size();
    TruthRun truth;
    truth.states.resize(sc.steps + 1, nx);
    truth.measurements.resize(sc.steps, meas->meas_dim());

    Eigen::VectorXd x = sample_gaussian(sc.initial_mean, sc.initial_cov, rng);
    truth.states.row(0) = x.transpose();
    const Eigen::MatrixXd G = dyn->noise_gain();
    double t = 0.0;
    for (int k = 0; k < sc.steps; ++k) {
        if (sc.dt != 0.0) {
            const Eigen::VectorXd mu = sc.process.sample(rng);
            x = dyn->propagate(x, t, sc.dt) + G * mu;
            t += sc.dt;
        }
        truth.states.row(k + 1) = x.transpose();
        truth.measurements.row(k) = (meas->measure(x) + sc.measurement.sample(rng)).transpose();
    }
    return truth;
}

namespace {

void run_one(const Scenario& sc, const DynamicsModel& dyn, const MeasurementModel& meas, const NoiseMoments& process,
             const NoiseMoments& meas_noise, const std::vector<StateGroup>& groups, int run, MCResult& out) {
    const TruthRun truth = simulate_truth(sc, run);
    const auto nx = sc.initial_mean.size();
    const std::vector<int> primary = sc.primary_components();

    double sigma0 = 0.0;
    for (int c : primary) sigma0 += sc.initial_cov(c, c);
    const double threshold = sc.divergence_factor * std::sqrt(sigma0);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    for (std::size_t f = 0; f < sc.filters.size(); ++f) {
        FilterRun& r = out.data[f][run];
        r.errors = Eigen::MatrixXd::Constant(sc.steps, nx, nan);
        r.group_vars = Eigen::MatrixXd::Constant(sc.steps, static_cast<Eigen::Index>(groups.size()), nan);
        std::uint64_t digest = 0xcbf29ce484222325ULL;

        std::optional<Filter> filter;
        try {
            filter.emplace(sc.filters[f], dyn, meas, process, meas_noise,
                           GaussianState{sc.initial_mean, sc.initial_cov, 0.0});
        } catch (const Error& e) {
            r.failed = true;
            r.failure = e.what();
        }
        for (int k = 0; k < sc.steps; ++k) {
            const Eigen::VectorXd y = truth.measurements.row(k).transpose();
            digest = fnv1a(y.data(), sizeof(double) * static_cast<std::size_t>(y.size()), digest);
            if (r.failed) continue;
            try {
                filter->predict(sc.dt);
                filter->update(y);
                const GaussianState& s = filter->state();
                if (!s.mean.allFinite() || !s.cov.allFinite()) throw NumericalError("non-finite estimate");
                r.errors.row(k) = (s.mean - truth.states.row(k + 1).transpose()).transpose();
                for (std::size_t g = 0; g < groups.size(); ++g) {
                    double tr = 0.0;
                    for (int c : groups[g].components) tr += s.cov(c, c);
                    r.group_vars(k, static_cast<Eigen::Index>(g)) = tr;
                }
                double e2 = 0.0;
                for (int c : primary) e2 += r.errors(k, c) * r.errors(k, c);
                if (!r.diverged && std::sqrt(e2) > threshold) {
                    r.diverged = true;
                    r.diverged_step = k + 1;
                }
            } catch (const Error& e) {
                r.failed = true;
                r.failure = "step " + std::to_string(k + 1) + ": " + e.what();
            }
        }
        r.stream_digest = digest;
    }
}

} // namespace

MCResult run_campaign(const Scenario& sc) {
    MCResult out;
    out.scenario = sc.name;
    for (const auto& f : sc.filters) out.filters.push_back(f.name());
    out.groups = sc.groups();
    out.primary = sc.primary_components();
    out.runs = sc.mc_runs;
    out.steps = sc.steps;
    out.state_dim = static_cast<int>(sc.initial_mean.size());
    out.dt = sc.dt;
    out.base_seed = sc.base_seed;
    out.config_hash = config_hash(sc.config);
    out.exclude_diverged = sc.exclude_diverged;
    out.data.assign(sc.filters.size(), std::vector<FilterRun>(sc.mc_runs));

    const auto dyn = sc.make_dynamics();
    const auto meas = sc.make_measurement();
    const NoiseMoments process = sc.process.moments();
    const NoiseMoments meas_noise = sc.measurement.moments();

    // Resolve point-set rules up front so workers only read the cache.
    const int nx = out.state_dim;
    for (const auto& f : sc.filters) {
        if (f.rule.kind == RuleKind::UT) continue;
        const int c = cut_order(f.rule.kind);
        if (f.noise_mode == NoiseMode::Augmented) {
            cut_points(nx + process.dim, c);
            cut_points(nx + meas_noise.dim, c);
            if (f.reuse_propagated_points) cut_points(nx + process.dim + meas_noise.dim, c);
        } else {
            cut_points(nx, c);
        }
    }

    int workers = sc.threads > 0 ? sc.threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, sc.mc_runs));
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (int run = next++; run < sc.mc_runs; run = next++) {
            try {
                run_one(sc, *dyn, *meas, process, meas_noise, out.groups, run, out);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    for (int run = 0; run < sc.mc_runs; ++run)
        for (std::size_t f = 1; f < out.filters.size(); ++f)
            if (out.data[f][run].stream_digest != out.data[0][run].stream_digest)
                throw std::logic_error("measurement streams differ between filters in run " + std::to_string(run));
    return out;
}

} // namespace polyfilter
