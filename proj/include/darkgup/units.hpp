#pragma once

// Physical parameters of the two-membrane optomechanical model and the
// conversions between SI quantities and the dimensionless unit system in which
// the mean mechanical frequency is 1.

namespace darkgup {

/// CODATA 2018 values.
struct PhysicalConstants {
  static constexpr double hbar = 1.054571817e-34;        // J s
  static constexpr double k_boltzmann = 1.380649e-23;    // J / K
  static constexpr double c_light = 299792458.0;         // m / s
  static constexpr double planck_mass = 2.176434e-8;     // kg
};

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// All rates are in units of the mean mechanical frequency. gamma_j and kappa
/// are amplitude decay rates.
struct SystemParams {
  double omega_b1 = 1.0;
  double omega_b2 = 1.0;
  double gamma1 = 1e-7;
  double gamma2 = 1e-7;
  double g1 = 1.9048e-6;
  double g2 = 1.9048e-6;
  double kappa = 4.1905;
  double kappa_in = 4.1905 / 2.0;
  double delta1 = 1.2857;   // cavity detuning from the carrier drive
  double delta2 = 1.0;      // modulation (second tone) detuning
  double drive_h = 0.0;
  double drive_c = 0.0;
  double nbar1 = 40.0;
  double nbar2 = 40.0;
  double beta_nl = 0.0;
  double theta = 0.0;       // bright-mode phase reference

  double omega_bar() const { return 0.5 * (omega_b1 + omega_b2); }
  /// Half the frequency splitting between the two resonators.
  double delta() const;
  /// Effective bright-mode coupling sqrt(g1^2 + g2^2).
  double g_bright() const;
  double gamma_mean() const { return 0.5 * (gamma1 + gamma2); }

  /// Throws DomainError on broken invariants; emits warnings when the
  /// parameters leave the weak-coupling / small-nonlinearity regime.
  void validate() const;
};

/// SI context used at the configuration boundary.
struct SiContext {
  double omega_b_si = 525e3;          // Hz, ordinary frequency of the mean mode
  double mass = 0.0;                  // kg, only needed for beta0 conversions
  double laser_wavelength = 1064e-9;  // m
  double temperature = 1e-4;          // K

  double omega_b_angular() const { return kTwoPi * omega_b_si; }
};

/// Ratio of a quantity to the reference frequency (same unit on both sides).
double to_dimensionless(double si_value, double reference);

/// Inverse of to_dimensionless.
double from_dimensionless(double value, double reference);

/// Angular frequency of a laser of the given vacuum wavelength (m -> rad/s).
double laser_angular_frequency(double wavelength);

/// Drive amplitude E = sqrt(2 kappa_in P / (hbar omega_o)) in 1/s.
/// kappa_in and laser_angular_freq are angular (rad/s).
double drive_amplitude_from_power(double power, double kappa_in, double laser_angular_freq);

/// Inverse of drive_amplitude_from_power (W).
double power_from_drive_amplitude(double amplitude, double kappa_in, double laser_angular_freq);

/// Bose-Einstein occupancy for an angular frequency (rad/s) at temperature T (K).
double thermal_occupancy(double omega_si, double temperature);

/// beta_NL = beta0 * hbar m omega_b / (m_p^2 c^2); omega_b_si in rad/s.
double beta_nl_from_beta0(double beta0, double mass, double omega_b_si);
double beta0_from_beta_nl(double beta_nl, double mass, double omega_b_si);

/// Time-domain resolution bound k / (|A_lim|^2 Q) of a freely decaying oscillator.
double resolution_limit(double k_decay, double amp_limit, double q_factor);

}  // namespace darkgup
