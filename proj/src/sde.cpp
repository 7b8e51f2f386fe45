#include "darkgup/sde.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "darkgup/errors.hpp"

namespace darkgup {
namespace {

constexpr double kResolutionSlack = 1.0 + 1e-12;
constexpr std::size_t kMedianWindow = 4096;
constexpr int kMedianPushEvery = 16;
constexpr int kMedianRecomputeEvery = 256;
constexpr double kInstabilityFactor = 1e6;

// (-i w - g) b + i w (beta/3)(b - b*)^3 + i g_rp |a|^2.
// (b - b*)^3 = -8 i y^3, so the cubic term is the real number (8/3) w beta y^3.
inline cplx mech_drift(cplx b, double omega, double gamma, double beta, double rp) {
  const double x = b.real();
  const double y = b.imag();
  const double cubic = (8.0 / 3.0) * omega * beta * y * y * y;
  return {-gamma * x + omega * y + cubic, -omega * x - gamma * y + rp};
}

inline cplx cavity_drift(const FullState& s, const SystemParams& p) {
  const double detuning = -p.delta1 + 2.0 * (p.g1 * s.b1.real() + p.g2 * s.b2.real());
  const cplx a = s.a;
  // (i detuning - kappa) a
  return {-p.kappa * a.real() - detuning * a.imag(), detuning * a.real() - p.kappa * a.imag()};
}

inline FullState full_drift(const FullState& s, const SystemParams& p, cplx drive) {
  const double n = std::norm(s.a);
  FullState d;
  d.a = cavity_drift(s, p) + drive;
  d.b1 = mech_drift(s.b1, p.omega_b1, p.gamma1, p.beta_nl, p.g1 * n);
  d.b2 = mech_drift(s.b2, p.omega_b2, p.gamma2, p.beta_nl, p.g2 * n);
  return d;
}

inline cplx drive_at(const SystemParams& p, double t) {
  return p.drive_h * std::polar(1.0, -p.delta2 * t) + p.drive_c;
}

inline bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

inline void check_finite(const FullState& s, std::uint64_t step) {
  if (!finite(s.a) || !finite(s.b1) || !finite(s.b2)) throw DivergenceError("non-finite state", step);
}

// `inc` holds the noise increments already scaled by sqrt(2 rate) dt.
FullState advance(const FullState& s, const SystemParams& p, const StepNoise& inc, cplx drive_now,
                  cplx drive_next, double dt, Scheme scheme, std::uint64_t step) {
  const FullState k1 = full_drift(s, p, drive_now);
  FullState out;
  if (scheme == Scheme::euler_maruyama) {
    out.a = s.a + dt * k1.a;
    out.b1 = s.b1 + dt * k1.b1;
    out.b2 = s.b2 + dt * k1.b2;
  } else {
    const FullState pred{s.a + dt * k1.a, s.b1 + dt * k1.b1, s.b2 + dt * k1.b2};
    const FullState k2 = full_drift(pred, p, drive_next);
    const double h = 0.5 * dt;
    out.a = s.a + h * (k1.a + k2.a);
    out.b1 = s.b1 + h * (k1.b1 + k2.b1);
    out.b2 = s.b2 + h * (k1.b2 + k2.b2);
  }
  out.a += inc.a;
  out.b1 += inc.b1;
  out.b2 += inc.b2;
  check_finite(out, step);
  return out;
}

void check_config(const IntegratorConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw ConfigError("integrator: dt must be > 0");
  if (!(cfg.t_total > 0.0)) throw ConfigError("integrator: t_total must be > 0");
  if (cfg.t_discard < 0.0 || !(cfg.t_discard < cfg.t_total))
    throw ConfigError("integrator: need 0 <= t_discard < t_total");
  if (cfg.record_stride < 0) throw ConfigError("integrator: record_stride must be >= 0");
}

std::uint64_t step_count(double t, double dt) { return static_cast<std::uint64_t>(std::llround(t / dt)); }

std::uint64_t first_recorded_step(double t_discard, double dt) {
  return static_cast<std::uint64_t>(std::ceil(t_discard / dt - 1e-9));
}

// Tracks a running median of |a| and flags runaway growth.
class RunawayDetector {
 public:
  void push(cplx a, std::uint64_t step) {
    if (++counter_ % kMedianPushEvery != 0) return;
    const double value = std::abs(a);
    if (median_ > 0.0 && value > kInstabilityFactor * median_) {
      std::ostringstream os;
      os << "cavity amplitude " << value << " exceeds 1e6 x running median " << median_;
      throw DivergenceError(os.str(), step);
    }
    if (ring_.size() < kMedianWindow) {
      ring_.push_back(value);
    } else {
      ring_[head_] = value;
      head_ = (head_ + 1) % kMedianWindow;
    }
    if (++pushes_ % kMedianRecomputeEvery == 0) {
      scratch_ = ring_;
      auto mid = scratch_.begin() + static_cast<std::ptrdiff_t>(scratch_.size() / 2);
      std::nth_element(scratch_.begin(), mid, scratch_.end());
      median_ = *mid;
    }
  }

 private:
  std::vector<double> ring_;
  std::vector<double> scratch_;
  std::size_t head_ = 0;
  std::uint64_t counter_ = 0;
  std::uint64_t pushes_ = 0;
  double median_ = 0.0;
};

}  // namespace

const char* to_string(Scheme s) { return s == Scheme::euler_maruyama ? "euler_maruyama" : "heun_drift"; }

Scheme scheme_from_string(const std::string& name) {
  if (name == "euler_maruyama" || name == "em") return Scheme::euler_maruyama;
  if (name == "heun_drift" || name == "heun") return Scheme::heun_drift;
  throw ConfigError("unknown integration scheme '" + name + "' (expected euler_maruyama or heun_drift)");
}

cplx step_single_oscillator(cplx b, const OscillatorParams& p, cplx eta, double dt, Scheme scheme,
                            std::uint64_t step_index) {
  const cplx k1 = mech_drift(b, p.omega, p.gamma, p.beta_nl, 0.0);
  cplx out;
  if (scheme == Scheme::euler_maruyama) {
    out = b + dt * k1;
  } else {
    const cplx k2 = mech_drift(b + dt * k1, p.omega, p.gamma, p.beta_nl, 0.0);
    out = b + 0.5 * dt * (k1 + k2);
  }
  out += std::sqrt(2.0 * p.gamma) * dt * eta;
  if (!finite(out)) throw DivergenceError("non-finite oscillator state", step_index);
  return out;
}

FullState step_full_system(const FullState& s, const SystemParams& p, const StepNoise& eta, double t, double dt,
                           Scheme scheme, std::uint64_t step_index) {
  const cplx now = drive_at(p, t);
  const cplx next = scheme == Scheme::heun_drift ? drive_at(p, t + dt) : now;
  const StepNoise inc{std::sqrt(2.0 * p.kappa) * dt * eta.a, std::sqrt(2.0 * p.gamma1) * dt * eta.b1,
                      std::sqrt(2.0 * p.gamma2) * dt * eta.b2};
  return advance(s, p, inc, now, next, dt, scheme, step_index);
}

NoiseSettings make_noise_settings(const SystemParams& p, std::uint64_t seed, bool enabled) {
  NoiseSettings n;
  n.seed = seed;
  n.enabled = enabled;
  n.nbar1 = p.nbar1;
  n.nbar2 = p.nbar2;
  return n;
}

double max_stable_dt(const SystemParams& p) {
  const double fastest = std::max({p.omega_b1, p.omega_b2, p.delta2});
  double bound = 0.05 / fastest;
  if (p.kappa > 0.0) bound = std::min(bound, 0.1 / p.kappa);
  return bound;
}

int default_record_stride(double dt, double delta2) {
  if (!(dt > 0.0) || !(delta2 > 0.0)) throw ConfigError("record stride: dt and delta2 must be > 0");
  const double per_period = kTwoPi / delta2 / dt;
  return std::max(1, static_cast<int>(std::floor(per_period / 16.0)));
}

Trajectory simulate(const SystemParams& p, const IntegratorConfig& cfg, const NoiseSettings& noise) {
  p.validate();
  check_config(cfg);
  const double bound = max_stable_dt(p);
  if (cfg.dt > bound * kResolutionSlack) {
    std::ostringstream os;
    os << "integrator: dt=" << cfg.dt << " exceeds resolution bound " << bound;
    throw ConfigError(os.str());
  }
  const int stride = cfg.record_stride > 0 ? cfg.record_stride : default_record_stride(cfg.dt, p.delta2);
  const std::uint64_t n_steps = step_count(cfg.t_total, cfg.dt);
  const std::uint64_t k0 = first_recorded_step(cfg.t_discard, cfg.dt);

  NoiseStream stream(noise.seed);
  FullState s{};
  if (cfg.initial) {
    s = *cfg.initial;
  } else if (noise.enabled) {
    s.b1 = stream.gaussian(noise.nbar1 + 0.5);
    s.b2 = stream.gaussian(noise.nbar2 + 0.5);
  }

  Trajectory traj;
  traj.params = p;
  traj.noise = noise;
  traj.dt = cfg.dt;
  traj.record_stride = stride;
  const std::size_t expected = k0 <= n_steps ? static_cast<std::size_t>((n_steps - k0) / stride + 1) : 0;
  traj.times.reserve(expected);
  traj.a.reserve(expected);
  traj.b1.reserve(expected);
  traj.b2.reserve(expected);

  auto record = [&](std::uint64_t k) {
    if (k < k0 || (k - k0) % static_cast<std::uint64_t>(stride) != 0) return;
    traj.times.push_back(static_cast<double>(k) * cfg.dt);
    traj.a.push_back(s.a);
    traj.b1.push_back(s.b1);
    traj.b2.push_back(s.b2);
  };

  RunawayDetector runaway;
  const bool heun = cfg.scheme == Scheme::heun_drift;
  // Per-step noise increments are c * (N(0,1) + i N(0,1)).
  const double dt = cfg.dt;
  const double ca = std::sqrt(2.0 * p.kappa) * dt * std::sqrt(0.5 / (2.0 * dt));
  const double c1 = std::sqrt(2.0 * p.gamma1) * dt * std::sqrt((noise.nbar1 + 0.5) / (2.0 * dt));
  const double c2 = std::sqrt(2.0 * p.gamma2) * dt * std::sqrt((noise.nbar2 + 0.5) / (2.0 * dt));
  if (noise.enabled && (noise.nbar1 < 0.0 || noise.nbar2 < 0.0)) throw DomainError("noise: occupancy must be >= 0");
  // e^{-i delta2 t} by rotation, re-anchored to the exact value every 1024 steps.
  const cplx rot = std::polar(1.0, -p.delta2 * dt);
  cplx phasor = 1.0;
  auto drive_from = [&](cplx z) { return cplx(p.drive_h * z.real() + p.drive_c, p.drive_h * z.imag()); };
  cplx drive_now = drive_at(p, 0.0);
  StepNoise inc{};
  record(0);
  for (std::uint64_t k = 0; k < n_steps; ++k) {
    if (((k + 1) & 1023u) == 0) {
      phasor = std::polar(1.0, -p.delta2 * static_cast<double>(k + 1) * dt);
    } else {
      phasor = cplx(phasor.real() * rot.real() - phasor.imag() * rot.imag(),
                    phasor.real() * rot.imag() + phasor.imag() * rot.real());
    }
    const cplx drive_next = drive_from(phasor);
    if (noise.enabled) {
      inc.a = ca * stream.standard();
      inc.b1 = c1 * stream.standard();
      inc.b2 = c2 * stream.standard();
    }
    s = advance(s, p, inc, drive_now, heun ? drive_next : drive_now, dt, cfg.scheme, k + 1);
    runaway.push(s.a, k + 1);
    drive_now = drive_next;
    record(k + 1);
  }
  return traj;
}

OscillatorTrajectory simulate_single(const OscillatorParams& p, const IntegratorConfig& cfg,
                                     const NoiseSettings& noise) {
  check_config(cfg);
  if (!(p.gamma >= 0.0) || !(p.omega > 0.0) || p.beta_nl < 0.0 || p.nbar < 0.0)
    throw DomainError("oscillator: need omega > 0, gamma >= 0, beta_nl >= 0, nbar >= 0");
  if (cfg.dt > 0.05 / p.omega * kResolutionSlack) throw ConfigError("integrator: dt exceeds 0.05 / omega");
  const int stride = cfg.record_stride > 0 ? cfg.record_stride : default_record_stride(cfg.dt, p.omega);
  const std::uint64_t n_steps = step_count(cfg.t_total, cfg.dt);
  const std::uint64_t k0 = first_recorded_step(cfg.t_discard, cfg.dt);

  NoiseStream stream(noise.seed);
  cplx b{};
  // The oscillator occupies the b1 slot of the initial state.
  if (cfg.initial) {
    b = cfg.initial->b1;
  } else if (noise.enabled) {
    b = stream.gaussian(p.nbar + 0.5);
  }

  OscillatorTrajectory traj;
  traj.params = p;
  traj.noise = noise;
  traj.dt = cfg.dt;
  traj.record_stride = stride;
  const std::size_t expected = k0 <= n_steps ? static_cast<std::size_t>((n_steps - k0) / stride + 1) : 0;
  traj.times.reserve(expected);
  traj.b.reserve(expected);
  auto record = [&](std::uint64_t k) {
    if (k < k0 || (k - k0) % static_cast<std::uint64_t>(stride) != 0) return;
    traj.times.push_back(static_cast<double>(k) * cfg.dt);
    traj.b.push_back(b);
  };

  record(0);
  cplx eta{};
  for (std::uint64_t k = 0; k < n_steps; ++k) {
    if (noise.enabled) eta = stream.white(cfg.dt, p.nbar);
    b = step_single_oscillator(b, p, eta, cfg.dt, cfg.scheme, k + 1);
    record(k + 1);
  }
  return traj;
}

StabilityReport assess_stability(std::span<const double> times, std::span<const std::span<const cplx>> series,
                                 double frequency, double window) {
  if (!(frequency > 0.0)) throw ConfigError("stability: frequency must be > 0");
  const double period = kTwoPi / frequency;
  if (window < 10.0 * period * (1.0 - 1e-12)) throw ConfigError("stability: window shorter than 10 drive periods");
  if (times.size() < 2) throw ConfigError("stability: trajectory too short");
  const double duration = times.back() - times.front();
  if (!(window < duration + 1e-12 * duration)) throw ConfigError("stability: window exceeds trajectory duration");

  const double t_start = times.back() - window;
  const auto n_periods = static_cast<std::size_t>(std::floor(window / period + 1e-9));

  StabilityReport report;
  report.window = window;
  double worst = 0.0;
  for (const auto& x : series) {
    if (x.size() != times.size()) throw ConfigError("stability: series length mismatch");
    double global_max = 0.0;
    for (const cplx& z : x) global_max = std::max(global_max, std::abs(z));

    std::vector<double> env(n_periods, 0.0);
    std::vector<bool> seen(n_periods, false);
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (times[i] < t_start) continue;
      auto j = static_cast<std::size_t>((times[i] - t_start) / period);
      if (j >= n_periods) j = n_periods - 1;
      env[j] = std::max(env[j], std::abs(x[i]));
      seen[j] = true;
    }
    std::vector<double> px, py;
    for (std::size_t j = 0; j < n_periods; ++j) {
      if (!seen[j]) continue;
      px.push_back(static_cast<double>(j));
      py.push_back(env[j]);
    }
    if (px.size() < 2) throw ConfigError("stability: too few samples per period");
    const double n = static_cast<double>(px.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t j = 0; j < px.size(); ++j) {
      mx += px[j];
      my += py[j];
    }
    mx /= n;
    my /= n;
    if (my <= 1e-12 * global_max || my == 0.0) continue;  // decayed to nothing
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t j = 0; j < px.size(); ++j) {
      sxy += (px[j] - mx) * (py[j] - my);
      sxx += (px[j] - mx) * (px[j] - mx);
    }
    const double slope = sxy / sxx;
    const double drift = std::abs(slope) * (px.back() - px.front()) / my;
    worst = std::max(worst, drift);
  }
  report.residual = worst;
  report.converged = worst < 0.01;
  return report;
}

StabilityReport assess_stability(const Trajectory& traj, double window) {
  const std::array<std::span<const cplx>, 3> s{std::span<const cplx>(traj.a), std::span<const cplx>(traj.b1),
                                               std::span<const cplx>(traj.b2)};
  return assess_stability(traj.times, s, traj.params.delta2, window);
}

}  // namespace darkgup
