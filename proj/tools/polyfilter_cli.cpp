// polyfilter command line: Monte Carlo campaigns, particle MMSE baselines and
// CUT rule validation.
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "polyfilter/campaign.hpp"
#include "polyfilter/emit.hpp"
#include "polyfilter/errors.hpp"
#include "polyfilter/metrics.hpp"
#include "polyfilter/scenario.hpp"
#include "polyfilter/sigma_points.hpp"

using namespace polyfilter;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

int cmd_run(const std::string& path, const std::string& out_opt, int runs, long long seed,
            const std::string& filters) {
    nlohmann::json config = read_config(path);
    if (runs > 0) config["monte_carlo"]["runs"] = runs;
    if (seed >= 0) config["monte_carlo"]["base_seed"] = static_cast<std::uint64_t>(seed);
    if (!filters.empty()) config["filters"] = split_list(filters);
    Scenario sc;
    try {
        sc = parse_scenario(config);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(e.what());
    }
    const std::string out_dir = out_opt.empty() ? resolve_out_dir("out/" + sc.name) : out_opt;

    const MCResult result = run_campaign(sc);
    emit(result, out_dir);
    std::printf("%-12s %-22s %s\n", "filter", "rmse", "flagged runs");
    for (std::size_t f = 0; f < result.filters.size(); ++f) {
        int flagged = 0;
        for (int r = 0; r < result.runs; ++r)
            flagged += result.data[f][r].failed || result.data[f][r].diverged;
        std::printf("%-12s %-22s %d\n", result.filters[f].c_str(), format_double(filter_rmse(result, f)).c_str(),
                    flagged);
    }
    std::printf("wrote %s\n", out_dir.c_str());
    return 0;
}

int cmd_mmse_fit(const std::string& path, int samples, int max_order) {
    const Scenario sc = load_scenario(path);
    if (sc.steps != 1 || sc.dt != 0.0) throw ConfigError("mmse-fit needs a single-update scenario (steps 1, dt 0)");
    const int n = samples > 0 ? samples : sc.mc_runs;
    const auto nx = sc.initial_mean.size();
    Eigen::MatrixXd X(n, nx);
    Eigen::MatrixXd Y(n, sc.measurement.dim());
    for (int run = 0; run < n; ++run) {
        const TruthRun t = simulate_truth(sc, run);
        X.row(run) = t.states.row(1);
        Y.row(run) = t.measurements.row(0);
    }
    const char* labels[] = {"LMMSE", "QMMSE", "CMMSE"};
    std::printf("%-8s %-22s\n", "fit", "rmse");
    for (int order = 1; order <= max_order; ++order) {
        const PolynomialFit fit = fit_polynomial_mmse(X, Y, order);
        const std::string label = order <= 3 ? labels[order - 1] : "P" + std::to_string(order) + "MMSE";
        std::printf("%-8s %-22s\n", label.c_str(), format_double(fit.rmse).c_str());
    }
    return 0;
}

// Largest error over every monomial of total degree <= c, and the largest
// moment of odd total degree (zero by the +/- pairing, exactly).
struct MomentReport {
    double even_err = 0.0;
    double odd_abs = 0.0;
};

MomentReport check_moments(const SigmaSet& set, int c) {
    MomentReport rep;
    const int n = set.dim();
    std::vector<int> e(n, 0);
    // Enumerate exponent vectors with sum <= c.
    while (true) {
        int total = 0;
        for (int v : e) total += v;
        if (total <= c) {
            double expected = 1.0;
            for (int v : e) {
                if (v % 2) expected = 0.0;
                for (int k = v - 1; k > 1; k -= 2) expected *= k;
            }
            const double got = raw_moment(set, e);
            if (total % 2) rep.odd_abs = std::max(rep.odd_abs, std::abs(got));
            else rep.even_err = std::max(rep.even_err, std::abs(got - expected));
        }
        int pos = 0;
        while (pos < n) {
            if (++e[pos] <= c) break;
            e[pos++] = 0;
        }
        if (pos == n) break;
    }
    return rep;
}

int cmd_validate_cut(int order, int dim, const std::string& write_table) {
    if (!write_table.empty()) {
        std::vector<CutRule> rules;
        for (int c : {4, 6, 8})
            for (int n = 1; n <= 12; ++n) {
                auto rule = solve_cut_rule(n, c);
                if (!rule) throw UnsupportedDimension("no CUT" + std::to_string(c) + " rule for n = " + std::to_string(n));
                rules.push_back(*rule);
            }
        save_cut_table(write_table, rules);
        std::printf("wrote %zu rules to %s\n", rules.size(), write_table.c_str());
        return 0;
    }
    std::vector<int> orders = order > 0 ? std::vector<int>{order} : std::vector<int>{4, 6, 8};
    std::vector<int> dims;
    if (dim > 0) dims = {dim};
    else dims = {1, 2, 3, 4, 5, 6};
    bool ok = true;
    std::printf("%-5s %-4s %-7s %-10s %-10s %-9s %s\n", "order", "n", "points", "max_err", "max_odd", "negative", "status");
    for (int c : orders)
        for (int n : dims) {
            const SigmaSet set = cut_points(n, c);
            const MomentReport rep = check_moments(set, c);
            const bool pass = rep.even_err <= 1e-9 && rep.odd_abs == 0.0;
            ok = ok && pass;
            std::printf("%-5d %-4d %-7d %-10.3e %-10.3e %-9s %s\n", c, n, set.size(), rep.even_err, rep.odd_abs,
                        cut_rule(n, c).has_negative_weight() ? "yes" : "no", pass ? "ok" : "FAIL");
        }
    return ok ? 0 : kExitNumerical;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Polynomial-update sigma-point filters: campaigns and diagnostics"};
    app.require_subcommand(1);

    std::string config, out_dir, filters;
    int runs = 0;
    long long seed = -1;
    auto* run = app.add_subcommand("run", "Run a Monte Carlo campaign and write CSV output");
    run->add_option("config", config, "Scenario JSON")->required();
    run->add_option("--out", out_dir, "Output directory (default: $POLYFILTER_OUT_DIR or out/<name>)");
    run->add_option("--runs", runs, "Override the number of Monte Carlo runs");
    run->add_option("--seed", seed, "Override the base seed");
    run->add_option("--filters", filters, "Comma-separated filter names, e.g. UKF,QUKF,QACUKF-4");

    std::string fit_config;
    int fit_samples = 0, fit_order = 3;
    auto* fit = app.add_subcommand("mmse-fit", "Polynomial MMSE baselines fitted to scenario samples");
    fit->add_option("config", fit_config, "Scenario JSON")->required();
    fit->add_option("--samples", fit_samples, "Sample count (default: the scenario's run count)");
    fit->add_option("--max-order", fit_order, "Highest polynomial order")->check(CLI::Range(1, 6));

    int cut_order_opt = 0, cut_dim = 0;
    std::string write_table;
    auto* cut = app.add_subcommand("validate-cut", "Check CUT rules against Gaussian moments");
    cut->add_option("--order", cut_order_opt, "CUT order (4, 6 or 8)")->check(CLI::IsMember({4, 6, 8}));
    cut->add_option("--dim", cut_dim, "Dimension")->check(CLI::Range(1, 12));
    cut->add_option("--write-table", write_table, "Solve n = 1..12 for every order and write the rule table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run(config, out_dir, runs, seed, filters);
        if (*fit) return cmd_mmse_fit(fit_config, fit_samples, fit_order);
        if (*cut) return cmd_validate_cut(cut_order_opt, cut_dim, write_table);
    } catch (const InputError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
