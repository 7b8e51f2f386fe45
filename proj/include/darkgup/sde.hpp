#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "darkgup/noise.hpp"
#include "darkgup/units.hpp"

// Semiclassical Langevin integration of the cavity + two-membrane system and
// of a single GUP-deformed oscillator.

namespace darkgup {

using cplx = std::complex<double>;

enum class Scheme { euler_maruyama, heun_drift };

const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

struct FullState {
  cplx a;
  cplx b1;
  cplx b2;
};

struct IntegratorConfig {
  double dt = 0.02;
  double t_total = 0.0;
  double t_discard = 0.0;
  Scheme scheme = Scheme::heun_drift;
  int record_stride = 0;  // 0: pick the largest stride keeping >= 16 samples per drive period
  std::optional<FullState> initial;  // default: empty cavity, thermal mechanical states
};

/// Single oscillator b' = (-i w - g) b + i w (beta/3)(b - b*)^3 + sqrt(2 g) b_in.
struct OscillatorParams {
  double omega = 1.0;
  double gamma = 1e-3;
  double beta_nl = 0.0;
  double nbar = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<cplx> a;
  std::vector<cplx> b1;
  std::vector<cplx> b2;
  SystemParams params;
  NoiseSettings noise;
  double dt = 0.0;  // integration step
  int record_stride = 1;

  std::size_t size() const { return times.size(); }
  double sample_interval() const { return dt * record_stride; }
};

struct OscillatorTrajectory {
  std::vector<double> times;
  std::vector<cplx> b;
  OscillatorParams params;
  NoiseSettings noise;
  double dt = 0.0;
  int record_stride = 1;

  double sample_interval() const { return dt * record_stride; }
};

struct StabilityReport {
  bool converged = false;
  double residual = 0.0;  // relative envelope drift over the window
  double window = 0.0;
};

/// Noise increments for one step (already scaled as <eta* eta> = (n+1/2)/dt).
struct StepNoise {
  cplx a;
  cplx b1;
  cplx b2;
};

/// One step of the single-oscillator equation. `eta` is the bath increment;
/// pass 0 for deterministic dynamics. Throws DivergenceError on non-finite state.
cplx step_single_oscillator(cplx b, const OscillatorParams& p, cplx eta, double dt, Scheme scheme,
                            std::uint64_t step_index = 0);

/// One step of the three coupled equations at time t.
FullState step_full_system(const FullState& s, const SystemParams& p, const StepNoise& eta, double t, double dt,
                           Scheme scheme, std::uint64_t step_index = 0);

/// Noise settings whose channel occupancies are taken from the parameters.
NoiseSettings make_noise_settings(const SystemParams& p, std::uint64_t seed, bool enabled = true);

/// Largest admissible integration step for the given parameters.
double max_stable_dt(const SystemParams& p);

/// Record stride giving at least 16 samples per 2 pi / delta2.
int default_record_stride(double dt, double delta2);

Trajectory simulate(const SystemParams& p, const IntegratorConfig& cfg, const NoiseSettings& noise);

OscillatorTrajectory simulate_single(const OscillatorParams& p, const IntegratorConfig& cfg,
                                     const NoiseSettings& noise);

/// Per-period envelope drift of |a|, |b1|, |b2| over the final `window`;
/// converged iff the drift is below 1 % for every variable.
StabilityReport assess_stability(const Trajectory& traj, double window);

/// Same check on arbitrary series sampled at `times`, with period 2 pi / frequency.
StabilityReport assess_stability(std::span<const double> times, std::span<const std::span<const cplx>> series,
                                 double frequency, double window);

}  // namespace darkgup
