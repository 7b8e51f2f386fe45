#include "darkgup/modes.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <sstream>

#include "darkgup/errors.hpp"

namespace darkgup {

cplx estimate_static_offset(std::span<const double> times, std::span<const cplx> b, double delta2, double t_window) {
  if (times.size() != b.size()) throw DomainError("static offset: length mismatch");
  if (times.size() < 2) throw ConfigError("static offset: series too short");
  if (!(delta2 > 0.0)) throw DomainError("static offset: delta2 must be > 0");
  const double period = kTwoPi / delta2;
  const double dt = times[1] - times[0];
  const double span = times.back() - times.front() + dt;
  if (!(t_window > 0.0) || t_window > span * (1.0 + 1e-9)) throw ConfigError("static offset: window exceeds record");

  const double periods = t_window / period;
  const double whole = std::floor(periods + 1e-6);
  if (std::abs(periods - whole) > 1e-6) {
    std::ostringstream os;
    os << "static offset: window of " << periods << " periods truncated to " << whole;
    warn(os.str());
  }
  if (whole < 10.0) throw ConfigError("static offset: window must span at least 10 drive periods");
  const double window = whole * period;

  // Samples in [t_end - window, t_end).
  const double t_end = times.back() + dt;
  const double t_begin = t_end - window;
  // Normal equations for b = c0 + c1 u, u = e^{-i delta2 t}, |u| = 1.
  double n = 0.0;
  cplx su, sb, sbu;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_begin - 1e-9 * dt) continue;
    const cplx u = std::polar(1.0, -delta2 * times[i]);
    n += 1.0;
    su += u;
    sb += b[i];
    sbu += b[i] * std::conj(u);
  }
  // [n, su; conj(su), n] [c0; c1] = [sb; sbu]
  const double det = n * n - std::norm(su);
  if (!(det > 0.0)) throw NumericalError("static offset: singular fit");
  return (n * sb - su * sbu) / det;
}

std::vector<cplx> demodulate(std::span<const double> times, std::span<const cplx> b, cplx beta_offset,
                             double delta2) {
  if (times.size() != b.size()) throw DomainError("demodulate: length mismatch");
  std::vector<cplx> out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = (b[i] - beta_offset) * std::polar(1.0, delta2 * times[i]);
  return out;
}

std::vector<cplx> lowpass_zero_phase(std::span<const cplx> x, double dt, double cutoff) {
  if (!(dt > 0.0) || !(cutoff > 0.0)) throw DomainError("lowpass: dt and cutoff must be > 0");
  const double nyquist = kPi / dt;
  if (cutoff >= nyquist) throw DomainError("lowpass: cutoff must be below the Nyquist frequency");
  if (x.empty()) return {};
  // Bilinear Butterworth biquad, cutoff in angular units.
  const double k = std::tan(0.5 * cutoff * dt);
  const double norm = 1.0 / (1.0 + std::sqrt(2.0) * k + k * k);
  const double b0 = k * k * norm, b1 = 2.0 * b0, b2 = b0;
  const double a1 = 2.0 * (k * k - 1.0) * norm;
  const double a2 = (1.0 - std::sqrt(2.0) * k + k * k) * norm;

  auto pass = [&](std::vector<cplx>& y) {
    // Start from the steady state of the first sample.
    cplx s1 = y[0] * (1.0 - b0), s2 = y[0] * (b2 - a2);
    for (auto& v : y) {
      const cplx in = v;
      const cplx out = b0 * in + s1;
      s1 = b1 * in - a1 * out + s2;
      s2 = b2 * in - a2 * out;
      v = out;
    }
  };
  std::vector<cplx> y(x.begin(), x.end());
  pass(y);
  std::reverse(y.begin(), y.end());
  pass(y);
  std::reverse(y.begin(), y.end());
  return y;
}

std::pair<cplx, cplx> supermode_transform(cplx A1, cplx A2, double g1, double g2) {
  const double gb = std::hypot(g1, g2);
  if (!(gb > 0.0)) throw DomainError("supermode transform: both couplings are zero");
  return {(g1 * A1 + g2 * A2) / gb, (g1 * A2 - g2 * A1) / gb};
}

std::pair<cplx, cplx> inverse_supermode_transform(cplx Ab, cplx Ad, double g1, double g2) {
  const double gb = std::hypot(g1, g2);
  if (!(gb > 0.0)) throw DomainError("supermode transform: both couplings are zero");
  return {(g1 * Ab - g2 * Ad) / gb, (g2 * Ab + g1 * Ad) / gb};
}

std::pair<std::vector<cplx>, std::vector<cplx>> supermode_transform(std::span<const cplx> A1,
                                                                    std::span<const cplx> A2, double g1, double g2) {
  if (A1.size() != A2.size()) throw DomainError("supermode transform: length mismatch");
  std::vector<cplx> b(A1.size()), d(A1.size());
  for (std::size_t i = 0; i < A1.size(); ++i) std::tie(b[i], d[i]) = supermode_transform(A1[i], A2[i], g1, g2);
  return {std::move(b), std::move(d)};
}

std::pair<std::vector<cplx>, std::vector<cplx>> inverse_supermode_transform(std::span<const cplx> Ab,
                                                                            std::span<const cplx> Ad, double g1,
                                                                            double g2) {
  if (Ab.size() != Ad.size()) throw DomainError("supermode transform: length mismatch");
  std::vector<cplx> a1(Ab.size()), a2(Ab.size());
  for (std::size_t i = 0; i < Ab.size(); ++i)
    std::tie(a1[i], a2[i]) = inverse_supermode_transform(Ab[i], Ad[i], g1, g2);
  return {std::move(a1), std::move(a2)};
}

double time_avg_amplitude(std::span<const double> times, std::span<const cplx> series, double t_start) {
  if (times.size() != series.size()) throw DomainError("time average: length mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_start) continue;
    sum += std::abs(series[i]);
    ++n;
  }
  if (n == 0) throw DomainError("time average: empty window");
  return sum / static_cast<double>(n);
}

SlowAmplitudeSeries extract_slow_amplitudes(const Trajectory& traj, const DemodulationOptions& opt) {
  const SystemParams& p = traj.params;
  if (traj.size() < 2) throw ConfigError("demodulation: trajectory too short");
  const double period = kTwoPi / p.delta2;
  const double dt = traj.sample_interval();
  double window = opt.offset_window;
  if (window <= 0.0) {
    const double span = traj.times.back() - traj.times.front() + dt;
    window = std::floor(span / period + 1e-9) * period;
  }

  SlowAmplitudeSeries s;
  s.times = traj.times;
  s.frame_freq = p.delta2;
  s.seed = traj.noise.seed;
  s.beta_offset1 = estimate_static_offset(traj.times, traj.b1, p.delta2, window);
  s.beta_offset2 = estimate_static_offset(traj.times, traj.b2, p.delta2, window);
  s.A1 = demodulate(traj.times, traj.b1, s.beta_offset1, p.delta2);
  s.A2 = demodulate(traj.times, traj.b2, s.beta_offset2, p.delta2);
  if (opt.lowpass) {
    s.A1 = lowpass_zero_phase(s.A1, dt, 0.25 * p.delta2);
    s.A2 = lowpass_zero_phase(s.A2, dt, 0.25 * p.delta2);
  }
  std::tie(s.Ab, s.Ad) = supermode_transform(s.A1, s.A2, p.g1, p.g2);
  return s;
}

}  // namespace darkgup
