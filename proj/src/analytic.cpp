#include "darkgup/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "darkgup/bessel.hpp"
#include "darkgup/errors.hpp"

namespace darkgup {
namespace {

constexpr double kTailTolerance = 1e-12;
constexpr int kMaxTruncation = 500;
constexpr cplx kI{0.0, 1.0};

struct CavityPoles {
  cplx L_h;
  cplx L_c;
  double delta2;

  explicit CavityPoles(const SystemParams& p)
      : L_h(-p.kappa, -(p.delta1 - p.delta2)), L_c(-p.kappa, -p.delta1), delta2(p.delta2) {}

  cplx D_h(int n) const { return kI * (n * delta2) - L_h; }
  cplx D_c(int n) const { return kI * (n * delta2) - L_c; }
};

// |A_b| substituted when the bright amplitude is exactly zero, so that the
// ratios F1 ~ S1/|A_b| and F3 ~ S3/|A_b|^2 take their finite limits.
double effective_amplitude(double abs_Ab, const SystemParams& p) {
  const double gb = p.g_bright();
  if (abs_Ab > 0.0 || gb == 0.0) return abs_Ab;
  return 1e-30 * p.delta2 / gb;
}

// Sum over n >= n0 of (xi/2)^n / n!, an upper bound for sum |J_n(xi)|.
double bessel_tail(double xi, int n0) {
  if (xi == 0.0) return n0 <= 0 ? 1.0 : 0.0;
  const double log_half = std::log(0.5 * xi);
  double total = 0.0;
  for (int n = std::max(n0, 0); n < n0 + 400; ++n) {
    const double term = std::exp(n * log_half - std::lgamma(n + 1.0));
    total += term;
    if (term < 1e-40 * total || term == 0.0) break;
  }
  return total;
}

void check_params(double abs_Ab, const SystemParams& p) {
  if (abs_Ab < 0.0 || !std::isfinite(abs_Ab)) throw DomainError("sideband: |A_b| must be finite and >= 0");
  if (!(p.delta2 > 0.0)) throw DomainError("sideband: delta2 must be > 0");
  if (!(p.kappa > 0.0)) throw DomainError("sideband: kappa must be > 0");
}

int initial_truncation(double xi) { return static_cast<int>(std::ceil(xi)) + 20; }

}  // namespace

SidebandCoefficients sideband_coefficients_fixed(double abs_Ab, double theta, const SystemParams& p,
                                                 int truncation_order) {
  check_params(abs_Ab, p);
  const int N = truncation_order;
  if (N < 2) throw DomainError("sideband: truncation order must be >= 2");
  const double r = effective_amplitude(abs_Ab, p);
  const double xi = 2.0 * p.g_bright() * r / p.delta2;
  const BesselSeries J(N + 3, -xi);
  const CavityPoles poles(p);

  cplx s1h, s1c, s2, s3;
  for (int n = -N; n <= N; ++n) {
    const double jn = J(n);
    s1h += jn * J(n + 1) / (poles.D_h(n) * std::conj(poles.D_h(n + 1)));
    s1c += jn * J(n + 1) / (poles.D_c(n) * std::conj(poles.D_c(n + 1)));
    s2 += jn * jn / (poles.D_h(n) * std::conj(poles.D_c(n)));
    s3 += jn * J(n + 2) / (poles.D_c(n) * std::conj(poles.D_h(n + 2)));
  }

  const double Eh = p.drive_h;
  const double Ec = p.drive_c;
  SidebandCoefficients out;
  out.xi = abs_Ab > 0.0 ? xi : 0.0;
  out.truncation_order = N;
  if (r > 0.0) {
    out.F1 = (Eh * Eh * s1h + Ec * Ec * s1c) / r;
    out.F3 = Eh * Ec * s3 / (r * r);
  }
  out.F2 = Eh * Ec * s2;
  const cplx Ab = std::polar(abs_Ab, theta);
  out.P_minus1 = Ab * out.F1 + out.F2 + Ab * Ab * out.F3;

  // P0 from the harmonics c_m of the field.
  double p0 = 0.0;
  for (int m = -N - 1; m <= N; ++m) {
    const cplx c = Eh * J(m + 1) * std::polar(1.0, -theta) / poles.D_h(m + 1) + Ec * J(m) / poles.D_c(m);
    p0 += std::norm(c);
  }
  out.P0 = p0;

  // Neglected terms have |n| > N - 2 in at least one Bessel factor; denominators exceed kappa.
  const double tail = 2.0 * bessel_tail(xi, N - 2) / (p.kappa * p.kappa);
  double scale = std::numeric_limits<double>::infinity();
  auto consider = [&](double prefactor, cplx s) {
    if (prefactor != 0.0 && std::abs(s) > 0.0) scale = std::min(scale, std::abs(s));
  };
  consider(Eh, s1h);
  consider(Ec, s1c);
  consider(Eh * Ec, s2);
  consider(Eh * Ec, s3);
  out.tail_bound = std::isfinite(scale) ? tail / scale : tail;
  return out;
}

SidebandCoefficients sideband_coefficients(double abs_Ab, double theta, const SystemParams& p) {
  check_params(abs_Ab, p);
  const double r = effective_amplitude(abs_Ab, p);
  const double xi = 2.0 * p.g_bright() * r / p.delta2;
  int N = initial_truncation(xi);
  while (N <= kMaxTruncation) {
    SidebandCoefficients s = sideband_coefficients_fixed(abs_Ab, theta, p, N);
    if (s.tail_bound < kTailTolerance) return s;
    N += 10;
  }
  std::ostringstream os;
  os << "sideband sums did not converge by N=" << kMaxTruncation << " (xi=" << xi << ")";
  throw NumericalError(os.str());
}

CavityClosedForm::CavityClosedForm(double abs_Ab, double theta, const SystemParams& p)
    : theta_(theta), delta2_(p.delta2) {
  const SidebandCoefficients s = sideband_coefficients(abs_Ab, theta, p);
  xi_ = 2.0 * p.g_bright() * abs_Ab / p.delta2;
  order_ = s.truncation_order + 1;
  const BesselSeries J(order_ + 2, -xi_);
  const CavityPoles poles(p);
  c_.resize(static_cast<std::size_t>(2 * order_ + 1));
  for (int m = -order_; m <= order_; ++m) {
    const cplx from_h = p.drive_h * J(m + 1) * std::polar(1.0, -(m + 1) * theta) / poles.D_h(m + 1);
    const cplx from_c = p.drive_c * J(m) * std::polar(1.0, -m * theta) / poles.D_c(m);
    c_[static_cast<std::size_t>(m + order_)] = from_h + from_c;
  }
}

cplx CavityClosedForm::harmonic(int m) const {
  if (std::abs(m) > order_) return {};
  return c_[static_cast<std::size_t>(m + order_)];
}

cplx CavityClosedForm::operator()(double t) const {
  const double phase = delta2_ * t;
  cplx sum;
  for (int m = -order_; m <= order_; ++m) sum += c_[static_cast<std::size_t>(m + order_)] * std::polar(1.0, m * phase);
  return std::polar(1.0, xi_ * std::sin(phase - theta_)) * sum;
}

cplx CavityClosedForm::intensity_coefficient(int k) const {
  cplx sum;
  for (int m = -order_; m <= order_; ++m) sum += harmonic(m + k) * std::conj(harmonic(m));
  return sum;
}

cplx cavity_closed_form(double t, double abs_Ab, double theta, const SystemParams& p) {
  return CavityClosedForm(abs_Ab, theta, p)(t);
}

SupermodeParams supermode_rates(const SystemParams& p) {
  const double dw1 = p.omega_b1 - p.delta2;
  const double dw2 = p.omega_b2 - p.delta2;
  SupermodeParams s;
  s.Delta_p = 0.5 * (dw1 + dw2);
  s.Gamma_b = cplx(0.5 * (p.gamma1 + p.gamma2), s.Delta_p);
  s.Gamma_d = s.Gamma_b;
  s.mu = cplx(0.5 * (p.gamma2 - p.gamma1), 0.5 * (p.omega_b2 - p.omega_b1));
  s.g_b = p.g_bright();
  return s;
}

namespace {

struct FixedPointMap {
  const SystemParams& p;
  cplx Gamma;
  double gb;

  // A = i g_b F2 / (Gamma - i g_b F1 - i g_b A F3), F's evaluated at |A|.
  cplx operator()(cplx A) const {
    const SidebandCoefficients s = sideband_coefficients(std::abs(A), std::arg(A), p);
    return kI * gb * s.F2 / (Gamma - kI * gb * s.F1 - kI * gb * A * s.F3);
  }

  double residual(cplx A) const {
    const SidebandCoefficients s = sideband_coefficients(std::abs(A), std::arg(A), p);
    return std::abs(A - kI * gb * s.P_minus1 / Gamma);
  }
};

}  // namespace

BrightSteadyState solve_bright_steady_state(const SystemParams& p, cplx Gamma_b, const SteadyStateOptions& opt) {
  if (std::abs(Gamma_b) == 0.0) throw DomainError("steady state: Gamma_b must be nonzero");
  BrightSteadyState out;
  const double gb = p.g_bright();
  if (p.drive_h == 0.0 || p.drive_c == 0.0 || gb == 0.0) {
    // Without the two-tone product there is no resonant drive at delta2 from rest.
    out.Ab = 0.0;
    out.sidebands = sideband_coefficients(0.0, 0.0, p);
    out.residual = std::abs(gb * out.sidebands.P_minus1 / Gamma_b);
    return out;
  }

  cplx A = 0.0;
  const int steps = std::max(1, opt.continuation_steps);
  bool warned = false;
  for (int step = 1; step <= steps; ++step) {
    SystemParams ps = p;
    const double s = static_cast<double>(step) / steps;
    ps.drive_h *= s;
    ps.drive_c *= s;
    const FixedPointMap map{ps, Gamma_b, gb};

    double lambda = opt.damping;
    cplx history[3] = {A, A, A};
    int hist_len = 0;
    int alternations = 0;
    cplx last_delta = 0.0;
    bool converged = false;
    for (int it = 0; it < opt.max_iterations; ++it) {
      const cplx next = (1.0 - lambda) * A + lambda * map(A);
      const cplx delta = next - A;
      ++out.iterations;

      if (std::real(delta * std::conj(last_delta)) < 0.0) {
        if (++alternations >= 20) {
          out.oscillatory = true;
          if (!warned) {
            warn("bright steady state: oscillatory fixed-point iterates (possible bistability); reducing damping");
            warned = true;
          }
          lambda = std::max(lambda * 0.5, 1e-3);
          alternations = 0;
        }
      } else {
        alternations = 0;
      }
      last_delta = delta;
      A = next;

      if (std::abs(delta) <= opt.tolerance * std::max(std::abs(A), 1e-300)) {
        converged = true;
        break;
      }

      history[0] = history[1];
      history[1] = history[2];
      history[2] = A;
      hist_len = std::min(hist_len + 1, 3);
      if (it >= opt.aitken_after && hist_len == 3 && it % 3 == 0) {
        const cplx d1 = history[1] - history[0];
        const cplx d2 = history[2] - 2.0 * history[1] + history[0];
        if (std::abs(d2) > 0.0) {
          const cplx candidate = history[0] - d1 * d1 / d2;
          if (std::isfinite(candidate.real()) && std::isfinite(candidate.imag()) &&
              map.residual(candidate) < map.residual(A)) {
            A = candidate;
            hist_len = 0;
          }
        }
      }
    }
    if (!converged) {
      std::ostringstream os;
      os << "bright steady state did not converge in " << opt.max_iterations
         << " iterations (continuation step " << step << "/" << steps << ")";
      throw NumericalError(os.str());
    }
  }

  const FixedPointMap map{p, Gamma_b, gb};
  out.Ab = A;
  out.residual = map.residual(A);
  out.sidebands = sideband_coefficients(std::abs(A), std::arg(A), p);
  return out;
}

cplx steady_bright_amplitude(const SystemParams& p, const SteadyStateOptions& opt) {
  return solve_bright_steady_state(p, supermode_rates(p).Gamma_b, opt).Ab;
}

cplx detuned_bright_amplitude(const SystemParams& p, double Delta_p, const SteadyStateOptions& opt) {
  if (Delta_p == 0.0) throw DomainError("detuned_bright_amplitude: Delta_p must be nonzero");
  return solve_bright_steady_state(p, cplx(p.gamma_mean(), Delta_p), opt).Ab;
}

double detuned_bright_amplitude_estimate(const SystemParams& p, double Delta_p, double abs_Ab) {
  if (Delta_p == 0.0) throw DomainError("detuned_bright_amplitude_estimate: Delta_p must be nonzero");
  const SidebandCoefficients s = sideband_coefficients(abs_Ab, 0.0, p);
  return std::abs(p.g_bright() * s.F2 / Delta_p);
}

cplx dark_excitation_estimate(cplx Ab, cplx mu, cplx Gamma_d) {
  if (std::abs(Gamma_d) == 0.0) throw DomainError("dark_excitation_estimate: Gamma_d must be nonzero");
  return -(mu / Gamma_d) * Ab;
}

double lorentzian_spectrum(double omega, double omega_peak, double gamma, double occupancy) {
  if (!(gamma > 0.0)) throw DomainError("lorentzian_spectrum: gamma must be > 0");
  const double d = std::abs(omega) - omega_peak;
  return gamma * (occupancy + 0.5) / (d * d + gamma * gamma);
}

double predicted_shift(double omega_b, double beta_nl, double amp) {
  const double x = beta_nl * amp * amp;
  if (x >= 0.1) warn("predicted_shift: beta_nl |A|^2 >= 0.1, first-order shift formula is unreliable");
  return omega_b * (1.0 + x);
}

double f1_imaginary_fraction(const SidebandCoefficients& s) {
  const double mag = std::abs(s.F1);
  return mag > 0.0 ? s.F1.imag() / mag : 0.0;
}

}  // namespace darkgup
