// CSV and manifest output for campaign results.
#pragma once

#include <string>

#include "polyfilter/campaign.hpp"

namespace polyfilter {

/// Shortest round-trip text for a double (17 significant digits).
std::string format_double(double v);

/// Writes errors.csv, sigma.csv, rmse.csv and manifest.json into out_dir
/// (created if needed). Throws IoError.
void emit(const MCResult& result, const std::string& out_dir);

/// Output directory: POLYFILTER_OUT_DIR when set, else the fallback.
std::string resolve_out_dir(const std::string& fallback);

} // namespace polyfilter
