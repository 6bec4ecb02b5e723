// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "radcom/config.hpp"
#include "radcom/experiments.hpp"
#include "radcom/model.hpp"

namespace radcom {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "1.0.0";

/// Schema violation or unreadable config; the message starts with the
/// offending path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PatternShape { kDirectional, kRectangular, kCustom };

/// Beampattern section in config units (degrees).
struct BeampatternConfig {
  PatternShape shape = PatternShape::kDirectional;
  double target_deg = 0.0;
  double half_width_deg = 5.0;  // rectangular only
  double grid_lo_deg = -90.0;
  double grid_hi_deg = 90.0;
  double grid_step_deg = 1.0;
  std::vector<double> angles_deg;  // custom only
  std::vector<double> desired;     // custom only
  double pattern_scale = 1.0;

  /// Angles in radians; directional shapes need the array geometry.
  BeampatternSpec build(const SystemConfig& system) const;
};

struct Config {
  SystemConfig system;
  BeampatternConfig beampattern;
  experiments::SweepPlan sweep;
  SolverSettings solver;

  void validate() const;
};

nlohmann::json to_json(const Config& config);
/// Strict reader: unknown keys, wrong types and bad values throw ConfigError
/// naming the dotted path. Missing keys keep their defaults.
Config config_from_json(const nlohmann::json& doc);

/// Parses `key=value`. The key is a dotted path ("system.reg_lambda") or a
/// bare field name that is unique across sections ("reg_lambda"). The value
/// is read as JSON when possible and as a string otherwise.
struct Override {
  std::string path;  // resolved dotted path
  nlohmann::json value;
};
Override parse_override(const std::string& assignment);

/// Applies overrides to a raw config document.
void apply_overrides(nlohmann::json& doc, const std::vector<Override>& overrides);

/// Reads a config file, or the config embedded in a run manifest.
nlohmann::json read_config_document(const std::string& path);

/// File + overrides -> validated Config.
Config load_config(const std::string& path, const std::vector<Override>& overrides);

struct RunManifest {
  std::string command;
  Config config;
  std::vector<Override> overrides;
  std::string created_utc;
  std::string finished_utc;
  std::vector<std::string> outputs;  // absolute paths
  std::string status;

  nlohmann::json to_json() const;
};

std::string utc_timestamp();

}  // namespace radcom
