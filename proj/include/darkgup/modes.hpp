#pragma once

#include <complex>
#include <span>
#include <utility>
#include <vector>

#include "darkgup/sde.hpp"

// Rotating-frame demodulation of mechanical trajectories and bright/dark
// supermode construction.

namespace darkgup {

using cplx = std::complex<double>;

struct SlowAmplitudeSeries {
  std::vector<double> times;
  std::vector<cplx> A1;
  std::vector<cplx> A2;
  std::vector<cplx> Ab;
  std::vector<cplx> Ad;
  cplx beta_offset1;
  cplx beta_offset2;
  double frame_freq = 1.0;  // delta2
  std::uint64_t seed = 0;

  std::size_t size() const { return times.size(); }
  double sample_interval() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

/// Static displacement of b over the final `t_window` of the series, from a
/// least-squares fit of b = beta0 + A e^{-i delta2 t}. A window that is not an
/// integer number of drive periods is truncated to one (with a warning);
/// fewer than 10 periods is a ConfigError.
cplx estimate_static_offset(std::span<const double> times, std::span<const cplx> b, double delta2, double t_window);

/// (b - beta0) e^{+i delta2 t}.
std::vector<cplx> demodulate(std::span<const double> times, std::span<const cplx> b, cplx beta_offset, double delta2);

/// Fourth-order zero-phase low-pass: a second-order Butterworth section run
/// forward and backward. Used only for amplitude reporting.
std::vector<cplx> lowpass_zero_phase(std::span<const cplx> x, double dt, double cutoff);

/// A_b = (g1 A1 + g2 A2)/g_b, A_d = (g1 A2 - g2 A1)/g_b.
std::pair<cplx, cplx> supermode_transform(cplx A1, cplx A2, double g1, double g2);
std::pair<cplx, cplx> inverse_supermode_transform(cplx Ab, cplx Ad, double g1, double g2);

std::pair<std::vector<cplx>, std::vector<cplx>> supermode_transform(std::span<const cplx> A1,
                                                                    std::span<const cplx> A2, double g1, double g2);
std::pair<std::vector<cplx>, std::vector<cplx>> inverse_supermode_transform(std::span<const cplx> Ab,
                                                                            std::span<const cplx> Ad, double g1,
                                                                            double g2);

/// Mean of |A(t)| over samples with t >= t_start.
double time_avg_amplitude(std::span<const double> times, std::span<const cplx> series, double t_start);

struct DemodulationOptions {
  double offset_window = 0.0;  // 0: largest integer number of periods in the record
  bool lowpass = false;        // smooth A1, A2 (and hence Ab, Ad) for amplitude reporting
};

/// Offsets, demodulation and supermodes of a full-system trajectory.
SlowAmplitudeSeries extract_slow_amplitudes(const Trajectory& traj, const DemodulationOptions& opt = {});

}  // namespace darkgup
