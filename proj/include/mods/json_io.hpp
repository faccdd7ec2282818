#pragma once

#include <string>

#include "mods/orchestrator.hpp"

namespace mods {

/// JSON text of a match report: solved flag, step index, model kind and
/// 9 row-major matrix entries, correspondence array, per-stage timings and
/// the configuration echo. Timings can be omitted for content comparisons.
std::string report_to_json(const MatchReport& report, bool include_timings = true);

/// Configuration round-trip; missing fields keep their defaults.
std::string config_to_json(const ModsConfig& cfg);
ModsConfig config_from_json(const std::string& text);
ModsConfig load_config(const std::string& path);

/// Reads a whitespace-separated row-major 3x3 matrix file.
Mat3 load_matrix3(const std::string& path);

/// Rebuilds the scoring-relevant part of a report from its JSON text
/// (correspondences, solved flag, step, timings).
MatchReport report_from_json(const std::string& text);

}  // namespace mods
