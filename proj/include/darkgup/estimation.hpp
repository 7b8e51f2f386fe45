#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "darkgup/sde.hpp"
#include "darkgup/spectrum.hpp"
#include "darkgup/units.hpp"

// Measurement protocol: (|<A_b>|^2, dark-mode peak) scatter over drive powers,
// straight-line fit, beta_NL estimate and the R^2 resolution limit.

namespace darkgup {

struct ScatterPoint {
  double amp_sq = 0.0;       // |<A_b>|^2
  double omega_peak = 0.0;   // dark-mode noise peak
  double sigma_omega = 0.0;  // peak-location uncertainty
  double power = 0.0;        // drive power (W) or drive amplitude, as configured
  std::uint64_t seed = 0;
  int run_id = 0;
  bool low_confidence = false;
};

struct ScatterSet {
  std::vector<ScatterPoint> points;
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double beta_nl_est = 0.0;  // slope / omega_bar
  double r_squared = 0.0;    // 1 - SS_res / SS_tot about the mean observed peak
  double ci_low = 0.0;       // 95 % interval on beta_nl_est
  double ci_high = 0.0;
  int dof = 0;
  int n_points = 0;
  double slope_stderr = 0.0;
  bool weighted = false;
};

/// Weighted (1/sigma^2) least squares of omega_peak against amp_sq with a
/// Student-t interval on the slope. Falls back to ordinary least squares when
/// `weighted` is false or any uncertainty is non-positive.
/// Throws FitError with fewer than 3 points or a degenerate abscissa.
FitResult linear_fit(const ScatterSet& scatter, double omega_bar = 1.0, bool weighted = true);

/// Dimensionless drive per sqrt(W): E_h = c sqrt(P). kappa_in is dimensionless.
double drive_per_sqrt_watt(double kappa_in, const SiContext& si);

struct ProtocolConfig {
  SystemParams base;
  std::vector<double> powers;        // drive grid, mapped to drive_h = drive_scale * sqrt(power)
  double drive_scale = 1.0;
  int replicates = 1;                // independent trajectories per power
  double record = 20.0;              // recorded duration, units of 1/gamma
  double transient = 5.0;            // discarded duration, units of 1/gamma
  double dt = 0.02;
  Scheme scheme = Scheme::heun_drift;
  int record_stride = 0;
  WelchConfig welch;                 // gamma is filled in from the parameters
  double band_lo = -10.0;            // peak search band around omega_bar, units of gamma
  double band_hi = 30.0;
  PeakMethod peak_method = PeakMethod::parabolic;
  bool exclude_coherent = true;      // skip the coherent line at delta2
  int exclude_bins = 3;
  bool weighted = true;
  bool noise = true;
  std::uint64_t master_seed = 1;
  int workers = 1;

  double gamma() const { return base.gamma_mean(); }
};

/// Dark-mode data of one trajectory, before spectral analysis.
struct PointData {
  double amp_avg = 0.0;           // time-averaged |A_b|
  std::vector<cplx> dark;         // A_d samples
  double sample_dt = 0.0;
  double frame_offset = 0.0;      // absolute frequency of the baseband origin
};

/// Produces the data for one run: parameters with drive_h already set, and the run seed.
using PointRunner = std::function<PointData(const SystemParams& p, std::uint64_t seed)>;

/// Runner integrating the full Langevin system.
PointRunner sde_point_runner(const ProtocolConfig& cfg);

struct ProtocolResult {
  ScatterSet scatter;
  FitResult fit;
  int failed_runs = 0;
  std::vector<std::string> failures;
};

/// Seed of replicate `rep` at grid point `point`; independent of beta_nl so that
/// sweeps over beta share noise realisations.
std::uint64_t protocol_seed(std::uint64_t master_seed, std::size_t point, int rep, int replicates);

/// Spectral analysis of one run: Welch spectrum of A_d and peak search.
ScatterPoint analyze_point(const PointData& data, const ProtocolConfig& cfg);

/// Runs every (power, replicate) pair, excludes divergent runs with a warning,
/// and fits the surviving points. Throws ProtocolError with fewer than 3 survivors.
ProtocolResult run_protocol(const ProtocolConfig& cfg, const PointRunner& runner = {});

struct SweepPoint {
  double beta_nl = 0.0;
  FitResult fit;
  int n_points = 0;
  bool failed = false;
};

struct SweepResult {
  std::vector<SweepPoint> points;  // ascending beta_nl
  double beta_nl_lim = 0.0;
  bool boundary = false;           // threshold not bracketed by the grid
  double threshold = 0.1;
};

/// run_protocol for each beta_nl; the limit is where R^2 first falls below
/// `threshold` scanning down from the largest value, interpolated linearly in
/// log beta. Requires a log-spaced grid spanning at least a decade.
SweepResult resolution_sweep(const ProtocolConfig& cfg, std::span<const double> beta_grid, double threshold = 0.1,
                             const PointRunner& runner = {});

/// Log-linear interpolation of the crossing on an ascending grid.
SweepResult locate_resolution_limit(std::vector<SweepPoint> points, double threshold);

void write_scatter_csv(const std::string& path, const ScatterSet& s);
void write_fit_csv(const std::string& path, const FitResult& f);
void write_sweep_csv(const std::string& path, const SweepResult& r);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// is rethrown after all workers finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace darkgup
