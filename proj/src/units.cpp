#include "darkgup/units.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "darkgup/errors.hpp"

namespace darkgup {

double SystemParams::delta() const { return 0.5 * std::abs(omega_b1 - omega_b2); }

double SystemParams::g_bright() const { return std::hypot(g1, g2); }

void SystemParams::validate() const {
  auto fail = [](const std::string& msg) { throw DomainError("invalid parameters: " + msg); };
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) fail("gamma1 and gamma2 must be > 0");
  if (!(kappa_in > 0.0)) fail("kappa_in must be > 0");
  if (kappa < kappa_in) fail("kappa must be >= kappa_in");
  if (g1 < 0.0 || g2 < 0.0) fail("couplings must be >= 0");
  if (!(omega_b1 > 0.0) || !(omega_b2 > 0.0)) fail("mechanical frequencies must be > 0");
  if (std::abs(omega_bar() - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "(omega_b1 + omega_b2)/2 must equal 1, got " << omega_bar();
    fail(os.str());
  }
  if (beta_nl < 0.0) fail("beta_nl must be >= 0");
  if (nbar1 < 0.0 || nbar2 < 0.0) fail("occupancies must be >= 0");
  if (drive_h < 0.0 || drive_c < 0.0) fail("drive amplitudes must be >= 0");

  if (beta_nl >= 1e-3) warn("beta_nl >= 1e-3 leaves the small-nonlinearity regime");
  const double gmax = std::max(g1, g2);
  if (gmax / kappa > 1e-2) warn("g/kappa > 1e-2: weak-coupling assumption violated");
  if (gmax / std::min(omega_b1, omega_b2) > 1e-2) warn("g/omega_b > 1e-2: weak-coupling assumption violated");
}

double to_dimensionless(double si_value, double reference) {
  if (!(reference > 0.0)) throw DomainError("to_dimensionless: reference must be > 0");
  return si_value / reference;
}

double from_dimensionless(double value, double reference) {
  if (!(reference > 0.0)) throw DomainError("from_dimensionless: reference must be > 0");
  return value * reference;
}

double laser_angular_frequency(double wavelength) {
  if (!(wavelength > 0.0)) throw DomainError("laser wavelength must be > 0");
  return kTwoPi * PhysicalConstants::c_light / wavelength;
}

double drive_amplitude_from_power(double power, double kappa_in, double laser_angular_freq) {
  if (power < 0.0) throw DomainError("drive power must be >= 0");
  if (!(kappa_in > 0.0) || !(laser_angular_freq > 0.0))
    throw DomainError("kappa_in and laser frequency must be > 0");
  return std::sqrt(2.0 * kappa_in * power / (PhysicalConstants::hbar * laser_angular_freq));
}

double power_from_drive_amplitude(double amplitude, double kappa_in, double laser_angular_freq) {
  if (amplitude < 0.0) throw DomainError("drive amplitude must be >= 0");
  if (!(kappa_in > 0.0) || !(laser_angular_freq > 0.0))
    throw DomainError("kappa_in and laser frequency must be > 0");
  return amplitude * amplitude * PhysicalConstants::hbar * laser_angular_freq / (2.0 * kappa_in);
}

double thermal_occupancy(double omega_si, double temperature) {
  if (!(omega_si > 0.0)) throw DomainError("thermal_occupancy: omega must be > 0");
  if (temperature < 0.0) throw DomainError("thermal_occupancy: temperature must be >= 0");
  if (temperature == 0.0) return 0.0;
  const double x = PhysicalConstants::hbar * omega_si / (PhysicalConstants::k_boltzmann * temperature);
  return 1.0 / std::expm1(x);
}

namespace {
double gup_scale(double mass, double omega_b_si) {
  constexpr double mp = PhysicalConstants::planck_mass;
  constexpr double c = PhysicalConstants::c_light;
  return PhysicalConstants::hbar * mass * omega_b_si / (mp * mp * c * c);
}
}  // namespace

double beta_nl_from_beta0(double beta0, double mass, double omega_b_si) {
  if (beta0 < 0.0 || mass < 0.0 || omega_b_si < 0.0)
    throw DomainError("beta_nl_from_beta0: arguments must be >= 0");
  return beta0 * gup_scale(mass, omega_b_si);
}

double beta0_from_beta_nl(double beta_nl, double mass, double omega_b_si) {
  if (beta_nl < 0.0 || mass < 0.0 || omega_b_si < 0.0)
    throw DomainError("beta0_from_beta_nl: arguments must be >= 0");
  if (mass == 0.0 || omega_b_si == 0.0)
    throw DomainError("beta0_from_beta_nl: mass and frequency must be > 0");
  return beta_nl / gup_scale(mass, omega_b_si);
}

double resolution_limit(double k_decay, double amp_limit, double q_factor) {
  if (!(k_decay > 0.0) || !(amp_limit > 0.0) || !(q_factor > 0.0))
    throw DomainError("resolution_limit: all arguments must be > 0");
  return k_decay / (amp_limit * amp_limit * q_factor);
}

}  // namespace darkgup
