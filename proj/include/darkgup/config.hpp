#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "darkgup/estimation.hpp"
#include "darkgup/sde.hpp"
#include "darkgup/units.hpp"

// Flat "key = value" scenario configuration, built-in presets and the
// resolved parameter echo.

namespace darkgup {

enum class ScenarioKind { fig2_amplitude, fig3_spectrum, fig4_resolution, fig5_mismatch, fig6_peak_vs_beta, custom };
enum class Scale { paper, desk };

const char* to_string(ScenarioKind s);
const char* to_string(Scale s);
ScenarioKind scenario_from_string(const std::string& s);
Scale scale_from_string(const std::string& s);

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
  std::string source;
};

/// '#' starts a comment; blank lines are ignored. Errors carry "source:line".
/// A file without any entry is a parse error.
std::vector<ConfigEntry> parse_config_text(const std::string& text, const std::string& source = "<config>");
std::vector<ConfigEntry> parse_config_file(const std::string& path);

/// Every key accepted in a configuration.
const std::vector<std::string>& known_config_keys();

/// Closest known key within edit distance 3, or empty.
std::string suggest_key(const std::string& key);

std::size_t edit_distance(const std::string& a, const std::string& b);

struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::custom;
  Scale scale = Scale::desk;
  SystemParams params;
  SiContext si;
  ProtocolConfig protocol;          // protocol.base mirrors params
  std::vector<double> beta_grid;    // resolution sweep / peak-vs-beta grid
  double threshold = 0.1;
  std::vector<double> records;      // record lengths compared by the resolution scenario (1/gamma)
  std::uint64_t master_seed = 1;
  int workers = 1;
  std::string output_dir;
  std::vector<ConfigEntry> entries;  // effective entries after preset merge
  std::vector<std::string> notes;    // non-fatal diagnostics

  /// Integrator settings for single-trajectory commands.
  IntegratorConfig integrator() const;
};

/// Preset text for a scenario at the given scale (also shipped under presets/).
std::string preset_text(ScenarioKind scenario, Scale scale);
std::string preset_name(ScenarioKind scenario, Scale scale);

/// Resolves entries on top of the preset selected by their scenario/scale keys.
/// `scale_override` (from the command line) replaces the file's scale when non-empty.
ScenarioConfig resolve_config(const std::vector<ConfigEntry>& entries, const std::string& scale_override = "");

ScenarioConfig load_config(const std::string& path, const std::string& scale_override = "");

/// Dimensionless echo of the resolved parameters, one "key = value" per line.
std::string echo_config(const ScenarioConfig& cfg);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& data);

}  // namespace darkgup
