#pragma once

#include <string>

#include "mgfreq/sim.hpp"

namespace mgfreq {

/// Column names of the trace CSV, comma separated (see schema/trace_columns.csv).
std::string trace_csv_header();

/// One row per step, every number printed with 15 significant digits.
void write_trace_csv(const ScenarioTrace& trace, const std::string& path);

/// JSON object: controller, scenario, seed, max_abs_freq_dev, freq_std,
/// settle_time (null when unsettled), constraint_violations and per-unit energy.
std::string metrics_json(const ScenarioTrace& trace, const RunMetrics& metrics);

/// Reads a JSON config; absent keys keep the built-in defaults.
SimConfig load_sim_config(const std::string& path);
SimConfig parse_sim_config(const std::string& json_text);

/// Full config with every key present.
std::string sim_config_json(const SimConfig& config);

}  // namespace mgfreq
