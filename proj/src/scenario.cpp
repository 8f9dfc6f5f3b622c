#include "polyfilter/scenario.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "polyfilter/errors.hpp"

namespace polyfilter {

using nlohmann::json;

std::string to_string(ScenarioKind kind) {
    switch (kind) {
    case ScenarioKind::ScalarArctan: return "scalar_arctan";
    case ScenarioKind::CWRelnav: return "cw_relnav";
    case ScenarioKind::CR3BPHalo: return "cr3bp_halo";
    }
    return "?";
}

namespace {

[[noreturn]] void bad(const std::string& what) { throw ConfigError(what); }

const json& need(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) bad(where + ": missing '" + key + "'");
    return j.at(key);
}

double number(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    // Fractions such as "15/18" keep probability tables exact in the file.
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        const auto slash = s.find('/');
        char* end = nullptr;
        if (slash == std::string::npos) {
            const double v = std::strtod(s.c_str(), &end);
            if (end != s.c_str() + s.size()) bad(where + ": not a number '" + s + "'");
            return v;
        }
        const std::string a = s.substr(0, slash), b = s.substr(slash + 1);
        const double num = std::strtod(a.c_str(), &end);
        if (end != a.c_str() + a.size()) bad(where + ": not a fraction '" + s + "'");
        const double den = std::strtod(b.c_str(), &end);
        if (end != b.c_str() + b.size() || den == 0.0) bad(where + ": not a fraction '" + s + "'");
        return num / den;
    }
    bad(where + ": expected a number");
}

std::vector<double> numbers(const json& j, const std::string& where) {
    if (!j.is_array()) bad(where + ": expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

Eigen::VectorXd vector_of(const json& j, const std::string& where) {
    const auto v = numbers(j, where);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Accepts "cov" (full matrix), "cov_diag" or "std" (per-component standard deviations).
Eigen::MatrixXd covariance_of(const json& j, const std::string& where) {
    if (j.contains("cov")) {
        const json& rows = j.at("cov");
        if (!rows.is_array()) bad(where + ".cov: expected a matrix");
        const auto n = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd P(n, n);
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto row = numbers(rows[r], where + ".cov");
            if (static_cast<Eigen::Index>(row.size()) != n) bad(where + ".cov: matrix must be square");
            for (Eigen::Index c = 0; c < n; ++c) P(r, c) = row[c];
        }
        if ((P - P.transpose()).cwiseAbs().maxCoeff() > 0.0) bad(where + ".cov: matrix must be symmetric");
        return P;
    }
    if (j.contains("cov_diag")) return vector_of(j.at("cov_diag"), where + ".cov_diag").asDiagonal();
    if (j.contains("std")) {
        const Eigen::VectorXd s = vector_of(j.at("std"), where + ".std");
        return s.cwiseProduct(s).asDiagonal();
    }
    bad(where + ": needs one of 'cov', 'cov_diag', 'std'");
}

void check_units(const json& j, const std::vector<std::string>& expected, const std::string& where) {
    const json& u = need(j, "units", where);
    std::vector<std::string> got;
    if (u.is_string()) got.assign(expected.size(), u.get<std::string>());
    else if (u.is_array()) for (const auto& e : u) got.push_back(e.get<std::string>());
    if (got != expected) {
        std::string want;
        for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
        bad(where + ".units: expected [" + want + "]");
    }
}

NoiseSpec noise_of(const json& j, const std::string& where, int dim) {
    NoiseSpec spec;
    const std::string type = need(j, "type", where).get<std::string>();
    if (type == "gaussian") {
        spec.type = NoiseSpec::Type::Gaussian;
        spec.cov = covariance_of(j, where);
    } else if (type == "discrete_iid") {
        spec.type = NoiseSpec::Type::DiscreteIID;
        spec.values = numbers(need(j, "values", where), where + ".values");
        spec.probs = numbers(need(j, "probs", where), where + ".probs");
        spec.channels = j.value("channels", dim);
        try {
            discrete_moments(iid_discrete(spec.values, spec.probs, 1).values, spec.probs);
        } catch (const InputError& e) {
            bad(where + ": " + e.what());
        }
    } else {
        bad(where + ": unknown noise type '" + type + "'");
    }
    if (spec.dim() != dim) bad(where + ": dimension must be " + std::to_string(dim));
    return spec;
}

} // namespace

NoiseMoments NoiseSpec::moments() const {
    if (type == Type::Gaussian) return gaussian_moments(cov);
    const DiscreteDistribution d = iid_discrete(values, probs, channels);
    return discrete_moments(d.values, d.probs);
}

Eigen::VectorXd NoiseSpec::sample(std::mt19937_64& rng) const {
    if (type == Type::Gaussian) return sample_gaussian(Eigen::VectorXd::Zero(cov.rows()), cov, rng);
    Eigen::VectorXd out(channels);
    std::vector<Eigen::VectorXd> scalar_values;
    for (double v : values) scalar_values.push_back(Eigen::VectorXd::Constant(1, v));
    for (int c = 0; c < channels; ++c) out(c) = sample_discrete(scalar_values, probs, rng)(0);
    return out;
}

Eigen::VectorXd sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    if ((cov.array() == 0.0).all()) return mean;
    return mean + spd_factor(cov) * z;
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t config_hash(const json& config) {
    const std::string canonical = config.dump();  // object keys are sorted
    return fnv1a(canonical.data(), canonical.size());
}

std::uint64_t run_seed(std::uint64_t base_seed, std::uint64_t run) {
    std::uint64_t z = base_seed + run + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::unique_ptr<DynamicsModel> Scenario::make_dynamics() const {
    switch (kind) {
    case ScenarioKind::ScalarArctan: return std::make_unique<StaticScalarDynamics>();
    case ScenarioKind::CWRelnav: return std::make_unique<CWDynamics>(cw);
    case ScenarioKind::CR3BPHalo: return std::make_unique<CR3BPDynamics>(cr3bp, integrator);
    }
    return nullptr;
}

std::unique_ptr<MeasurementModel> Scenario::make_measurement() const {
    switch (kind) {
    case ScenarioKind::ScalarArctan: return std::make_unique<ArctanMeasurement>();
    case ScenarioKind::CWRelnav: return std::make_unique<AnglesMeasurement>();
    case ScenarioKind::CR3BPHalo: return std::make_unique<RangeRateMeasurement>();
    }
    return nullptr;
}

std::vector<StateGroup> Scenario::groups() const {
    if (kind == ScenarioKind::ScalarArctan) return {{"x", {0}}};
    return {{"pos", {0, 1, 2}}, {"vel", {3, 4, 5}}};
}

std::vector<int> Scenario::primary_components() const { return groups().front().components; }

Scenario parse_scenario(const json& config) {
    Scenario sc;
    sc.config = config;
    const std::string kind = need(config, "scenario", "config").get<std::string>();
    if (kind == "scalar_arctan") sc.kind = ScenarioKind::ScalarArctan;
    else if (kind == "cw_relnav") sc.kind = ScenarioKind::CWRelnav;
    else if (kind == "cr3bp_halo") sc.kind = ScenarioKind::CR3BPHalo;
    else bad("config: unknown scenario '" + kind + "'");
    sc.name = config.value("name", kind);

    std::vector<std::string> state_units;
    std::string time_unit;
    int nx = 1, nmu = 1, m = 1;
    switch (sc.kind) {
    case ScenarioKind::ScalarArctan:
        state_units = {"rad"};
        time_unit = "s";
        break;
    case ScenarioKind::CWRelnav:
        state_units = {"km", "km", "km", "km/s", "km/s", "km/s"};
        time_unit = "s";
        nx = 6, nmu = 3, m = 2;
        break;
    case ScenarioKind::CR3BPHalo:
        state_units = {"LU", "LU", "LU", "LU/TU", "LU/TU", "LU/TU"};
        time_unit = "TU";
        nx = 6, nmu = 3, m = 2;
        break;
    }

    const json model = config.value("model", json::object());
    if (sc.kind == ScenarioKind::CWRelnav) {
        sc.cw.semi_major_axis = number(need(model, "semi_major_axis_km", "model"), "model.semi_major_axis_km");
        sc.cw.grav_param = number(need(model, "grav_param_km3_s2", "model"), "model.grav_param_km3_s2");
        if (!(sc.cw.mean_motion() > 0.0)) bad("model: mean motion must be positive");
    } else if (sc.kind == ScenarioKind::CR3BPHalo) {
        sc.cr3bp.mu = number(need(model, "mass_ratio", "model"), "model.mass_ratio");
        sc.cr3bp.period = number(need(model, "period_tu", "model"), "model.period_tu");
        if (!(sc.cr3bp.mu > 0.0 && sc.cr3bp.mu < 0.5)) bad("model.mass_ratio must lie in (0, 0.5)");
        const json integ = model.value("integrator", json::object());
        sc.integrator.rel_tol = number(integ.value("rel_tol", json(1e-12)), "model.integrator.rel_tol");
        sc.integrator.abs_tol = number(integ.value("abs_tol", json(1e-12)), "model.integrator.abs_tol");
    }

    const json& initial = need(config, "initial", "config");
    check_units(initial, state_units, "initial");
    sc.initial_mean = vector_of(need(initial, "mean", "initial"), "initial.mean");
    sc.initial_cov = covariance_of(initial, "initial");
    if (sc.initial_mean.size() != nx || sc.initial_cov.rows() != nx)
        bad("initial: state dimension must be " + std::to_string(nx));

    const json& sched = need(config, "schedule", "config");
    if (need(sched, "time_unit", "schedule").get<std::string>() != time_unit)
        bad("schedule.time_unit: expected " + time_unit);
    if (sched.contains("steps_per_period")) {
        if (sc.kind != ScenarioKind::CR3BPHalo) bad("schedule.steps_per_period applies to cr3bp_halo only");
        const int per = sched.at("steps_per_period").get<int>();
        const int periods = need(sched, "periods", "schedule").get<int>();
        if (per < 1 || periods < 1) bad("schedule: steps_per_period and periods must be >= 1");
        sc.dt = sc.cr3bp.period / per;
        sc.steps = per * periods;
    } else {
        sc.dt = number(need(sched, "dt", "schedule"), "schedule.dt");
        sc.steps = need(sched, "steps", "schedule").get<int>();
    }
    if (sc.steps < 1 || !(sc.dt >= 0.0)) bad("schedule: steps >= 1 and dt >= 0 required");

    sc.process = noise_of(need(config, "process_noise", "config"), "process_noise", nmu);
    if (sc.process.type != NoiseSpec::Type::Gaussian) bad("process_noise: only gaussian is supported");
    sc.measurement = noise_of(need(config, "measurement_noise", "config"), "measurement_noise", m);

    const bool reuse = config.value("reuse_propagated_points", false);
    const json& filters = need(config, "filters", "config");
    if (!filters.is_array() || filters.empty()) bad("filters: expected a non-empty list of names");
    for (const auto& f : filters) {
        FilterConfig cfg;
        try {
            cfg = FilterConfig::from_name(f.get<std::string>());
        } catch (const InputError& e) {
            bad(std::string("filters: ") + e.what());
        }
        cfg.reuse_propagated_points = reuse;
        sc.filters.push_back(cfg);
    }

    const json& mc = need(config, "monte_carlo", "config");
    sc.mc_runs = need(mc, "runs", "monte_carlo").get<int>();
    sc.base_seed = need(mc, "base_seed", "monte_carlo").get<std::uint64_t>();
    sc.threads = mc.value("threads", 0);
    if (sc.mc_runs < 1) bad("monte_carlo.runs must be >= 1");

    const json div = config.value("divergence", json::object());
    sc.divergence_factor = number(div.value("factor", json(1000.0)), "divergence.factor");
    sc.exclude_diverged = div.value("exclude_from_sigma", true);
    return sc;
}

json read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse config '" + path + "': " + e.what());
    }
}

Scenario load_scenario(const std::string& path) {
    try {
        return parse_scenario(read_config(path));
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
}

} // namespace polyfilter
