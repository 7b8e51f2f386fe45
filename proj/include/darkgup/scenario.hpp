#pragma once

#include <string>
#include <utility>
#include <vector>

#include "darkgup/config.hpp"
#include "darkgup/estimation.hpp"
#include "darkgup/spectrum.hpp"

// Scenario drivers behind the command-line tool and their run manifests.

namespace darkgup {

inline constexpr const char* kVersion = "1.0.0";

struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> fields;
  std::vector<std::string> files;
  std::vector<std::string> failures;

  bool partial() const { return !failures.empty(); }
};

/// Plain-text "key = value" manifest. The only line that changes between
/// identical runs is the one starting with "timestamp".
void write_manifest(const std::string& path, const Manifest& m, double wall_seconds);

/// Manifest pre-filled with the configuration identity (hash, seed, preset, versions).
Manifest make_manifest(const std::string& command, const ScenarioConfig& cfg);

struct AmplitudePoint {
  double power = 0.0;
  double drive_h = 0.0;
  double amp_avg = 0.0;       // time-averaged |A_b|
  double amp_analytic = 0.0;  // slow-flow fixed point (NaN if it did not converge)
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
};

/// Time-averaged bright amplitude for every power of the protocol grid.
std::vector<AmplitudePoint> amplitude_sweep(const ScenarioConfig& cfg);

struct MismatchMeasurement {
  double abs_Ab = 0.0;        // |<A_b>| (complex time average)
  double abs_Ad = 0.0;        // |<A_d>|
  double ratio = 0.0;         // abs_Ad / abs_Ab
  double delta = 0.0;         // half splitting of the resonators
  double delta_p = 0.0;       // mean eigenfrequency minus delta2
  double ratio_estimate = 0.0;  // |mu / Gamma_d|
  double coherent_freq = 0.0;   // delta2
  double coherent_height = 0.0; // PSD at the coherent line
  PeakEstimate noise_peak;      // dark-mode noise peak, coherent line excluded
  double valley = 0.0;          // PSD minimum between coherent line and noise peak
  Spectrum spectrum;
  std::uint64_t seed = 0;
};

MismatchMeasurement measure_mismatch(const ScenarioConfig& cfg, std::uint64_t seed);

struct BetaPeakPoint {
  double beta_nl = 0.0;
  double amp_sq = 0.0;
  double omega_peak = 0.0;
  double sigma_omega = 0.0;
  double predicted = 0.0;  // omega_bar (1 + beta_nl amp_sq)
  bool failed = false;
};

/// Dark-mode peak at the configured power for every beta in the grid (shared seed).
std::vector<BetaPeakPoint> peak_vs_beta(const ScenarioConfig& cfg);

/// Runs the scenario of `cfg`, writing CSVs into out_dir. Partial failures are
/// listed in the manifest; a scenario without any usable result throws.
Manifest run_scenario(const ScenarioConfig& cfg, const std::string& out_dir);

}  // namespace darkgup
