// Experiment configuration loaded from JSON scenario files.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "polyfilter/filter.hpp"
#include "polyfilter/models.hpp"
#include "polyfilter/moments.hpp"

#include "json.hpp"

namespace polyfilter {

enum class ScenarioKind { ScalarArctan, CWRelnav, CR3BPHalo };

std::string to_string(ScenarioKind kind);

/// Zero-mean noise: Gaussian with a covariance, or iid channels drawn from a discrete table.
struct NoiseSpec {
    enum class Type { Gaussian, DiscreteIID };
    Type type = Type::Gaussian;
    Eigen::MatrixXd cov;
    std::vector<double> values;  // per-channel table (DiscreteIID)
    std::vector<double> probs;
    int channels = 0;

    int dim() const { return type == Type::Gaussian ? static_cast<int>(cov.rows()) : channels; }
    /// Moments handed to the filters (exact for both types).
    NoiseMoments moments() const;
    Eigen::VectorXd sample(std::mt19937_64& rng) const;
};

/// A named group of state components (e.g. position, velocity).
struct StateGroup {
    std::string name;
    std::vector<int> components;
};

struct Scenario {
    ScenarioKind kind = ScenarioKind::ScalarArctan;
    std::string name;
    CWParams cw;
    CR3BPParams cr3bp;
    IntegratorSettings integrator;
    Eigen::VectorXd initial_mean;
    Eigen::MatrixXd initial_cov;
    double dt = 0.0;
    int steps = 1;
    NoiseSpec process;
    NoiseSpec measurement;
    std::vector<FilterConfig> filters;
    int mc_runs = 1;
    std::uint64_t base_seed = 0;
    double divergence_factor = 1000.0;
    bool exclude_diverged = true;
    int threads = 0;  // 0: hardware concurrency
    nlohmann::json config;  // effective configuration, canonical source of the manifest hash

    std::unique_ptr<DynamicsModel> make_dynamics() const;
    std::unique_ptr<MeasurementModel> make_measurement() const;
    std::vector<StateGroup> groups() const;
    /// Component indices whose error drives divergence and RMSE.
    std::vector<int> primary_components() const;
};

/// Throws ConfigError on missing or inconsistent fields.
Scenario parse_scenario(const nlohmann::json& config);
Scenario load_scenario(const std::string& path);
nlohmann::json read_config(const std::string& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t config_hash(const nlohmann::json& config);

/// Per-run generator seed: splitmix64 of base_seed + run, so runs are independent of each other.
std::uint64_t run_seed(std::uint64_t base_seed, std::uint64_t run);

Eigen::VectorXd sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, std::mt19937_64& rng);

} // namespace polyfilter
