#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "darkgup/analytic.hpp"
#include "darkgup/bessel.hpp"
#include "darkgup/errors.hpp"
#include "darkgup/units.hpp"
#include "reference.hpp"

using namespace darkgup;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SystemParams driven(double eh, double ec) {
  SystemParams p;
  p.drive_h = eh;
  p.drive_c = ec;
  return p;
}

double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("xi = 0 collapse of F2") {
  const SystemParams p = driven(3.0, 5.0);
  const auto s = sideband_coefficients(0.0, 0.0, p);
  const cplx L_h(-p.kappa, -(p.delta1 - p.delta2));
  const cplx L_c(-p.kappa, -p.delta1);
  const cplx expected = p.drive_h * p.drive_c / ((-L_h) * std::conj(-L_c));
  CHECK(rel_err(s.F2, expected) < 1e-14);
  CHECK(s.xi == 0.0);
  CHECK(s.tail_bound < 1e-12);
}

TEST_CASE("single-tone limit") {
  const SystemParams p = driven(7.0, 0.0);
  const auto s = sideband_coefficients(2e4, 0.3, p);
  CHECK(s.F2 == cplx(0.0));
  CHECK(s.F3 == cplx(0.0));
  CHECK(std::abs(s.F1) > 0.0);
  CHECK(rel_err(s.P_minus1, std::polar(2e4, 0.3) * s.F1) < 1e-14);
}

TEST_CASE("sums are stable against a larger truncation") {
  const SystemParams p = driven(11.0, 13.0);
  for (double xi : {0.0, 0.4, 2.0, 9.0, 35.0}) {
    const double amp = xi * p.delta2 / (2.0 * p.g_bright());
    const auto a = sideband_coefficients(amp, 0.7, p);
    const auto b = sideband_coefficients_fixed(amp, 0.7, p, a.truncation_order + 40);
    INFO("xi=" << xi);
    CHECK(a.tail_bound < 1e-12);
    for (auto [x, y] : {std::pair{a.F2, b.F2}, std::pair{a.P_minus1, b.P_minus1}}) CHECK(rel_err(x, y) < 1e-10);
    if (xi > 0.0) {
      CHECK(rel_err(a.F1, b.F1) < 1e-10);
      CHECK(rel_err(a.F3, b.F3) < 1e-10);
    }
  }
}

TEST_CASE("P_-1 equals the e^{-i delta2 t} intensity coefficient of the field harmonics") {
  const SystemParams p = driven(2.0, 3.0);
  for (double xi : {0.5, 3.0, 10.0}) {
    const double amp = xi * p.delta2 / (2.0 * p.g_bright());
    const double theta = 0.9;
    const auto s = sideband_coefficients(amp, theta, p);
    const CavityClosedForm a(amp, theta, p);
    INFO("xi=" << xi);
    CHECK(rel_err(s.P_minus1, a.intensity_coefficient(-1)) < 1e-10);
    CHECK_THAT(s.P0, WithinRel(a.intensity_coefficient(0).real(), 1e-10));
  }
}

TEST_CASE("closed form matches direct integration of the cavity equation") {
  SystemParams p = driven(1.5, 2.5);
  const double period = kTwoPi / p.delta2;
  for (double xi : {0.5, 3.0, 10.0}) {
    const double amp = xi * p.delta2 / (2.0 * p.g_bright());
    const double theta = 0.4;
    const CavityClosedForm closed(amp, theta, p);
    const auto ode = ref::prescribed_cavity(amp, theta, p, 10.0 * period, 50.0 * period, period / 200.0, 20);
    double num = 0.0, den = 0.0, mean_intensity = 0.0;
    for (std::size_t i = 0; i < ode.t.size(); ++i) {
      num += std::norm(closed(ode.t[i]) - ode.a[i]);
      den += std::norm(ode.a[i]);
      if (i + 1 < ode.t.size()) mean_intensity += std::norm(ode.a[i]);
    }
    mean_intensity /= static_cast<double>(ode.t.size() - 1);
    INFO("xi=" << xi);
    CHECK(std::sqrt(num / den) < 1e-3);
    CHECK_THAT(mean_intensity, WithinRel(sideband_coefficients(amp, theta, p).P0, 1e-6));
  }
}

TEST_CASE("undressed cavity") {
  SystemParams p = driven(1.0, 2.0);
  p.g1 = p.g2 = 0.0;
  const CavityClosedForm a(0.0, 0.0, p);
  const cplx L_h(-p.kappa, -(p.delta1 - p.delta2));
  const cplx L_c(-p.kappa, -p.delta1);
  for (double t : {0.0, 1.3, 17.0}) {
    const cplx expected = p.drive_h * std::exp(cplx(0.0, -p.delta2 * t)) / (-L_h) + p.drive_c / (-L_c);
    CHECK(rel_err(a(t), expected) < 1e-14);
  }
}

TEST_CASE("supermode rates") {
  SystemParams p;
  auto r = supermode_rates(p);
  CHECK(r.mu == cplx(0.0));
  CHECK(r.Gamma_b == r.Gamma_d);
  CHECK(r.Gamma_b.imag() == 0.0);
  CHECK(r.Gamma_b.real() > 0.0);

  p.omega_b1 = 1.0 - 1.9048e-6;
  p.omega_b2 = 1.0 + 1.9048e-6;
  r = supermode_rates(p);
  CHECK(r.mu.real() == 0.0);
  CHECK_THAT(std::abs(r.mu), WithinRel(1.9048e-6, 1e-9));

  p.delta2 = 1.0 - 1e-3;
  r = supermode_rates(p);
  CHECK_THAT(r.Delta_p, WithinRel(1e-3, 1e-9));
  CHECK_THAT(r.Gamma_b.imag(), WithinRel(1e-3, 1e-9));

  p.omega_b1 = 1.0 - 0.3e-4;
  p.omega_b2 = 1.0 + 0.3e-4;
  r = supermode_rates(p);
  CHECK(std::abs(r.mu) < std::abs(supermode_rates([] {
                          SystemParams q;
                          q.omega_b1 = 1.0 - 1e-4;
                          q.omega_b2 = 1.0 + 1e-4;
                          return q;
                        }())
                                          .mu));
}

TEST_CASE("bright steady state") {
  SECTION("no drive") {
    const SystemParams p;
    CHECK(steady_bright_amplitude(p) == cplx(0.0));
  }
  SECTION("low drive matches the linearised amplitude") {
    SystemParams p = driven(1.0, 1.0);
    p.gamma1 = p.gamma2 = 1e-4;
    const cplx A = steady_bright_amplitude(p);
    const auto s0 = sideband_coefficients(0.0, 0.0, p);
    const double linear = std::abs(p.g_bright() * s0.F2 / supermode_rates(p).Gamma_b);
    CHECK_THAT(std::abs(A), WithinRel(linear, 1e-3));
  }
  SECTION("fixed-point residual") {
    for (double e : {30.0, 300.0, 1500.0}) {
      SystemParams p = driven(e, e);
      p.gamma1 = p.gamma2 = 1e-4;
      const auto st = solve_bright_steady_state(p, supermode_rates(p).Gamma_b);
      const auto s = sideband_coefficients(std::abs(st.Ab), std::arg(st.Ab), p);
      const cplx Gamma = supermode_rates(p).Gamma_b;
      const double res = std::abs(-Gamma * st.Ab + cplx(0.0, p.g_bright()) * s.P_minus1);
      INFO("E=" << e << " |A|=" << std::abs(st.Ab));
      CHECK(res < 1e-10 * std::abs(st.Ab) * std::abs(Gamma));
      CHECK(st.residual < 1e-10 * std::abs(st.Ab));
    }
  }
  SECTION("amplitude is nondecreasing in P_h with shrinking increments") {
    SystemParams p = driven(0.0, 2.6e4);
    std::vector<double> amps;
    for (int i = 1; i <= 10; ++i) {
      p.drive_h = 2.6e4 * std::sqrt(i / 10.0);
      amps.push_back(std::abs(steady_bright_amplitude(p)));
    }
    for (std::size_t i = 1; i < amps.size(); ++i) CHECK(amps[i] >= amps[i - 1]);
    for (std::size_t i = 2; i < amps.size(); ++i) CHECK(amps[i] - amps[i - 1] < amps[i - 1] - amps[i - 2]);
  }
}

TEST_CASE("detuned bright amplitude") {
  SystemParams p = driven(2.0, 2.0);
  p.gamma1 = p.gamma2 = 1e-4;
  const double a1 = std::abs(detuned_bright_amplitude(p, 1e-2));
  const double a2 = std::abs(detuned_bright_amplitude(p, 2e-2));
  CHECK_THAT(a1 / a2, WithinRel(2.0, 1e-3));
  CHECK_THAT(detuned_bright_amplitude_estimate(p, 1e-2, a1), WithinRel(a1, 1e-3));
  const double tiny = std::abs(detuned_bright_amplitude(p, 1e-12));
  CHECK_THAT(tiny, WithinRel(std::abs(steady_bright_amplitude(p)), 1e-6));
  CHECK_THROWS_AS(detuned_bright_amplitude(p, 0.0), DomainError);
}

TEST_CASE("mismatch operating point gives a bright amplitude of order 3e4") {
  SiContext si;
  const double kin = 0.5 * kTwoPi * 2.2e6;
  const double e = drive_amplitude_from_power(100e-6, kin, laser_angular_frequency(si.laser_wavelength)) /
                   si.omega_b_angular();
  SystemParams p = driven(e, e);
  p.omega_b1 = 1.0 - 1.0 / 525e3;
  p.omega_b2 = 1.0 + 1.0 / 525e3;
  p.delta2 = 525.48 / 525.0;
  const double amp = std::abs(detuned_bright_amplitude(p, supermode_rates(p).Delta_p));
  // Order of magnitude only.
  CHECK(amp > 3e3);
  CHECK(amp < 3e5);
}

TEST_CASE("dark excitation estimate") {
  CHECK(dark_excitation_estimate(cplx(5.0, 1.0), 0.0, cplx(1e-4, 1e-2)) == cplx(0.0));
  const double dp = 480.0 / 525e3;
  const double delta = 1.0 / 525e3;
  const cplx est = dark_excitation_estimate(1.0, cplx(0.0, delta), cplx(1e-7, dp));
  CHECK_THAT(std::abs(est), WithinRel(1.0 / 480.0, 1e-6));
}

TEST_CASE("Lorentzian spectrum") {
  const double g = 1e-3, n = 40.0;
  CHECK_THAT(lorentzian_spectrum(1.0, 1.0, g, n), WithinRel((n + 0.5) / g, 1e-14));
  CHECK_THAT(lorentzian_spectrum(1.0 + g, 1.0, g, n), WithinRel(0.5 * (n + 0.5) / g, 1e-12));
  CHECK_THAT(lorentzian_spectrum(-1.0 - g, 1.0, g, n), WithinRel(0.5 * (n + 0.5) / g, 1e-12));
  // Trapezoid over +-300 linewidths plus the analytic tails.
  const double h = g / 200.0;
  const double span = 300.0 * g;
  double integral = 0.0;
  for (double w = 1.0 - span; w < 1.0 + span; w += h)
    integral += 0.5 * h * (lorentzian_spectrum(w, 1.0, g, n) + lorentzian_spectrum(w + h, 1.0, g, n));
  integral += 2.0 * (n + 0.5) * (0.5 * kPi - std::atan(span / g));
  CHECK_THAT(integral, WithinRel(kPi * (n + 0.5), 1e-4));
  CHECK_THROWS_AS(lorentzian_spectrum(1.0, 1.0, 0.0, n), DomainError);
}

TEST_CASE("predicted shift") {
  CHECK(predicted_shift(1.0, 0.0, 1e5) == 1.0);
  CHECK_THAT(predicted_shift(1.0, 1e-15, 1e5), WithinRel(1.0 + 1e-5, 1e-15));
  const double s1 = predicted_shift(1.3, 1e-9, 100.0) - predicted_shift(1.3, 1e-9, 0.0);
  const double s2 = predicted_shift(1.3, 1e-9, 200.0) - predicted_shift(1.3, 1e-9, 0.0);
  CHECK_THAT((s2 - s1) / (4e4 - 1e4), WithinRel(1.3e-9, 1e-9));
  std::vector<std::string> notes;
  ScopedWarningSink sink([&](const std::string& m) { notes.push_back(m); });
  predicted_shift(1.0, 1e-3, 20.0);
  CHECK(notes.size() == 1);
}

TEST_CASE("F1 diagnostic") {
  SidebandCoefficients s;
  CHECK(f1_imaginary_fraction(s) == 0.0);
  s.F1 = cplx(3.0, 4.0);
  CHECK_THAT(f1_imaginary_fraction(s), WithinRel(0.8, 1e-14));
}
