#include "polyfilter/emit.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "polyfilter/errors.hpp"
#include "polyfilter/metrics.hpp"

namespace polyfilter {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string resolve_out_dir(const std::string& fallback) {
    if (const char* env = std::getenv("POLYFILTER_OUT_DIR"); env && *env) return env;
    return fallback;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace

void emit(const MCResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());

    {
        const fs::path p = dir / "errors.csv";
        auto out = open_out(p);
        out << "run,step,filter,component,error\n";
        for (std::size_t f = 0; f < result.filters.size(); ++f)
            for (int run = 0; run < result.runs; ++run) {
                const FilterRun& r = result.data[f][run];
                for (int k = 0; k < result.steps; ++k)
                    for (int c = 0; c < result.state_dim; ++c)
                        out << run << ',' << k + 1 << ',' << result.filters[f] << ',' << c << ','
                            << format_double(r.errors(k, c)) << '\n';
            }
        close_out(out, p);
    }
    {
        const fs::path p = dir / "sigma.csv";
        auto out = open_out(p);
        out << "step,filter,group,est,eff\n";
        if (result.runs >= 2) {
            std::vector<SigmaCurve> curves;
            try {
                curves = sigma_curves(result);
            } catch (const InvalidArgument&) {
                curves.clear();  // too few usable runs: header only
            }
            for (const auto& c : curves)
                for (int k = 0; k < result.steps; ++k)
                    out << k + 1 << ',' << c.filter << ',' << c.group << ',' << format_double(c.est(k)) << ','
                        << format_double(c.eff(k)) << '\n';
        }
        close_out(out, p);
    }
    {
        const fs::path p = dir / "rmse.csv";
        auto out = open_out(p);
        out << "filter,rmse\n";
        for (std::size_t f = 0; f < result.filters.size(); ++f)
            out << result.filters[f] << ',' << format_double(filter_rmse(result, f)) << '\n';
        close_out(out, p);
    }
    {
        nlohmann::ordered_json m;
        char hash[20];
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(result.config_hash));
        m["scenario"] = result.scenario;
        m["config_hash"] = hash;
        m["base_seed"] = result.base_seed;
        m["runs"] = result.runs;
        m["steps"] = result.steps;
        m["dt"] = result.dt;
        m["filters"] = result.filters;
        m["exclude_diverged_from_sigma"] = result.exclude_diverged;
        nlohmann::ordered_json flagged = nlohmann::ordered_json::array();
        for (std::size_t f = 0; f < result.filters.size(); ++f)
            for (int run = 0; run < result.runs; ++run) {
                const FilterRun& r = result.data[f][run];
                if (!r.failed && !r.diverged) continue;
                nlohmann::ordered_json e;
                e["filter"] = result.filters[f];
                e["run"] = run;
                e["diverged"] = r.diverged;
                e["diverged_step"] = r.diverged_step;
                e["failed"] = r.failed;
                e["failure"] = r.failure;
                flagged.push_back(e);
            }
        m["flagged_runs"] = flagged;
        const fs::path p = dir / "manifest.json";
        auto out = open_out(p);
        out << m.dump(2) << '\n';
        close_out(out, p);
    }
}

} // namespace polyfilter
