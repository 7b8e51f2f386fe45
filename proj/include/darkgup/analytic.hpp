#pragma once

#include <complex>
#include <vector>

#include "darkgup/units.hpp"

// Closed-form layer of the two-membrane model: Jacobi-Anger sideband sums for
// the cavity field under a sinusoidally moving bright mode, the slow-flow fixed
// point of the bright amplitude, supermode rates, Lorentzian noise spectra and
// the mismatch estimates.
//
// Conventions (frame rotating with the carrier drive E_c):
//   L_h = -i (delta1 - delta2) - kappa     (cavity seen from the modulated tone)
//   L_c = -i delta1 - kappa                (cavity seen from the carrier)
//   xi  = 2 g_b |A_b| / delta2,  psi(t) = xi sin(delta2 t - theta)
//   a(t) = e^{i psi(t)} sum_m c_m e^{i m delta2 t}
//   |a(t)|^2 = sum_k P_k e^{i k delta2 t},  P_{-1} = A_b F1 + F2 + A_b^2 F3

namespace darkgup {

using cplx = std::complex<double>;

struct SidebandCoefficients {
  cplx F1;
  cplx F2;
  cplx F3;
  cplx P_minus1;
  double P0 = 0.0;      // time-averaged intracavity intensity
  double xi = 0.0;
  int truncation_order = 0;
  double tail_bound = 0.0;  // bound on the neglected part, relative to the sums
};

/// Evaluates F1, F2, F3 and P_{-1} with adaptive symmetric truncation |n| <= N,
/// starting at N = ceil(xi) + 20. Throws NumericalError if N would exceed 500.
SidebandCoefficients sideband_coefficients(double abs_Ab, double theta, const SystemParams& p);

/// Same sums at a fixed truncation order (no adaptivity); used to check that
/// results are stable against the truncation.
SidebandCoefficients sideband_coefficients_fixed(double abs_Ab, double theta, const SystemParams& p,
                                                 int truncation_order);

/// Stationary cavity field for a bright mode moving as |A_b| e^{-i(delta2 t - theta)}.
class CavityClosedForm {
 public:
  CavityClosedForm(double abs_Ab, double theta, const SystemParams& p);

  cplx operator()(double t) const;

  /// Harmonic coefficient c_m multiplying e^{i m delta2 t} inside the phase factor.
  cplx harmonic(int m) const;
  int max_harmonic() const { return order_; }
  double xi() const { return xi_; }

  /// k-th Fourier coefficient of |a|^2, computed from the harmonics.
  cplx intensity_coefficient(int k) const;

 private:
  double xi_;
  double theta_;
  double delta2_;
  int order_;
  std::vector<cplx> c_;  // index m + order_
};

cplx cavity_closed_form(double t, double abs_Ab, double theta, const SystemParams& p);

struct SupermodeParams {
  cplx Gamma_b;
  cplx Gamma_d;
  cplx mu;
  double g_b = 0.0;
  double Delta_p = 0.0;  // Im(Gamma_b): mean eigenfrequency minus delta2
};

SupermodeParams supermode_rates(const SystemParams& p);

struct SteadyStateOptions {
  double damping = 0.5;
  int max_iterations = 10000;
  int aitken_after = 50;
  int continuation_steps = 8;
  double tolerance = 1e-13;
};

struct BrightSteadyState {
  cplx Ab;
  int iterations = 0;
  double residual = 0.0;  // |A - i g_b P_{-1}(A) / Gamma_b|
  bool oscillatory = false;
  SidebandCoefficients sidebands;
};

/// Solves Gamma_b A = i g_b P_{-1}(A) by damped fixed-point iteration with
/// continuation in the drive strength from rest. GUP terms are not included.
BrightSteadyState solve_bright_steady_state(const SystemParams& p, cplx Gamma_b,
                                            const SteadyStateOptions& opt = {});

/// Steady bright amplitude with Gamma_b from supermode_rates().
cplx steady_bright_amplitude(const SystemParams& p, const SteadyStateOptions& opt = {});

/// Bright amplitude when the drive is detuned by Delta_p from the mean
/// eigenfrequency: Gamma_b = gamma_mean + i Delta_p.
cplx detuned_bright_amplitude(const SystemParams& p, double Delta_p,
                              const SteadyStateOptions& opt = {});

/// Large-detuning estimate |g_b F2 / Delta_p| with F2 evaluated at the given |A_b|.
double detuned_bright_amplitude_estimate(const SystemParams& p, double Delta_p, double abs_Ab);

/// Coherent dark amplitude driven through the beam-splitter coupling:
/// A_d = -(mu / Gamma_d) A_b.
cplx dark_excitation_estimate(cplx Ab, cplx mu, cplx Gamma_d);

/// Symmetrised Lorentzian gamma (n + 1/2) / ((|omega| - omega_peak)^2 + gamma^2).
double lorentzian_spectrum(double omega, double omega_peak, double gamma, double occupancy);

/// omega_b (1 + beta_nl amp^2); warns when beta_nl amp^2 >= 0.1.
double predicted_shift(double omega_b, double beta_nl, double amp);

/// Im(F1)/|F1|, zero when F1 vanishes. A real F1 means the cavity only
/// renormalises the bright-mode frequency without extra damping.
double f1_imaginary_fraction(const SidebandCoefficients& s);

}  // namespace darkgup
