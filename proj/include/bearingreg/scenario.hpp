#pragma once

#include "bearingreg/simulator.hpp"

#include <string>

namespace bearingreg {

/// Parse a scenario JSON file. Throws ConfigError on missing files, malformed
/// JSON, or invalid values.
ScenarioConfig load_scenario(const std::string& path);

/// Serialize a scenario back to JSON text (round-trips through load_scenario).
std::string scenario_to_json(const ScenarioConfig& cfg);

void save_scenario(const ScenarioConfig& cfg, const std::string& path);

} // namespace bearingreg
