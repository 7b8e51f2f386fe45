#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "darkgup/errors.hpp"
#include "darkgup/modes.hpp"
#include "darkgup/spectrum.hpp"

using namespace darkgup;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Series {
  std::vector<double> t;
  std::vector<cplx> b;
};

Series synth(cplx offset, cplx amp, double delta2, double dt, std::size_t n) {
  Series s;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 3.0 + i * dt;
    s.t.push_back(t);
    s.b.push_back(offset + amp * std::exp(cplx(0.0, -delta2 * t)));
  }
  return s;
}

const double kDelta2 = 1.0;
const double kDt = kTwoPi / 16.0;

}  // namespace

TEST_CASE("static offset of exact ansatz input") {
  const auto s = synth(3.0, 2.0, kDelta2, kDt, 16 * 40);
  CHECK_THAT(std::abs(estimate_static_offset(s.t, s.b, kDelta2, 40 * kTwoPi) - cplx(3.0)), WithinAbs(0.0, 1e-12));
  const auto p = synth(0.0, cplx(5.0, -1.0), kDelta2, kDt, 16 * 40);
  CHECK(std::abs(estimate_static_offset(p.t, p.b, kDelta2, 40 * kTwoPi)) < 1e-10 * std::abs(cplx(5.0, -1.0)));
}

TEST_CASE("offset recovery with additive noise") {
  std::mt19937_64 rng(3);
  const double sigma = 2.0;
  std::normal_distribution<double> nd(0.0, sigma / std::sqrt(2.0));
  int ok = 0;
  for (int r = 0; r < 20; ++r) {
    auto s = synth(cplx(1.0, -2.0), 7.0, kDelta2, 0.1, 20000);
    for (auto& v : s.b) v += cplx(nd(rng), nd(rng));
    const double window = std::floor((s.t.size() * 0.1) / kTwoPi) * kTwoPi;
    const cplx est = estimate_static_offset(s.t, s.b, kDelta2, window);
    const double n = window / 0.1;
    if (std::abs(est - cplx(1.0, -2.0)) < 5.0 * sigma / std::sqrt(n)) ++ok;
  }
  CHECK(ok == 20);
}

TEST_CASE("non-integer window is truncated with a warning") {
  const auto s = synth(3.0, 2.0, kDelta2, kDt, 16 * 40);
  std::vector<std::string> notes;
  ScopedWarningSink sink([&](const std::string& m) { notes.push_back(m); });
  const cplx est = estimate_static_offset(s.t, s.b, kDelta2, 30.5 * kTwoPi);
  CHECK(notes.size() == 1);
  CHECK(std::abs(est - cplx(3.0)) < 1e-12);
  CHECK_THROWS_AS(estimate_static_offset(s.t, s.b, kDelta2, 9.0 * kTwoPi), ConfigError);
}

TEST_CASE("demodulation") {
  SECTION("constant amplitude") {
    const auto s = synth(cplx(0.5, 0.1), cplx(2.0, 1.0), kDelta2, kDt, 1000);
    const auto A = demodulate(s.t, s.b, cplx(0.5, 0.1), kDelta2);
    for (const auto& v : A) REQUIRE(std::abs(v - cplx(2.0, 1.0)) < 1e-12);
  }
  SECTION("sideband moves to the baseband offset") {
    const double dw = 0.013, eps = 0.01;
    std::vector<double> t;
    std::vector<cplx> b;
    for (int i = 0; i < 4000; ++i) {
      t.push_back(i * 0.3);
      b.push_back(2.0 * std::exp(cplx(0.0, -kDelta2 * t.back())) + eps * std::exp(cplx(0.0, -(kDelta2 + dw) * t.back())));
    }
    const auto A = demodulate(t, b, 0.0, kDelta2);
    for (std::size_t i = 0; i < t.size(); ++i)
      REQUIRE(std::abs(A[i] - (2.0 + eps * std::exp(cplx(0.0, -dw * t[i])))) < 1e-12);
  }
  SECTION("noise-free parameter recovery") {
    const cplx beta0(0.37, -1.2), amp(-4.0, 2.5);
    const auto s = synth(beta0, amp, 0.97, 0.02, 200000);
    const double window = std::floor(s.t.size() * 0.02 / (kTwoPi / 0.97)) * (kTwoPi / 0.97);
    const cplx est = estimate_static_offset(s.t, s.b, 0.97, window);
    CHECK(std::abs(est - beta0) < 1e-9 * std::abs(beta0));
    const auto A = demodulate(s.t, s.b, est, 0.97);
    for (std::size_t i = 0; i < A.size(); i += 997) REQUIRE(std::abs(A[i] - amp) < 1e-9 * std::abs(amp));
  }
}

TEST_CASE("supermode transform") {
  const double g = 1.9048e-6;
  auto [b, d] = supermode_transform(cplx(2.0, 1.0), cplx(2.0, 1.0), g, g);
  CHECK(std::abs(b - std::sqrt(2.0) * cplx(2.0, 1.0)) < 1e-14);
  CHECK(std::abs(d) < 1e-15);
  std::tie(b, d) = supermode_transform(1.0, 0.0, g, g);
  CHECK_THAT(d.real(), WithinRel(-1.0 / std::sqrt(2.0), 1e-15));
  CHECK_THAT(b.real(), WithinRel(1.0 / std::sqrt(2.0), 1e-15));

  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 100; ++i) {
    const cplx a1(nd(rng), nd(rng)), a2(nd(rng), nd(rng));
    const double g1 = std::abs(nd(rng)) + 0.1, g2 = std::abs(nd(rng));
    const auto [xb, xd] = supermode_transform(a1, a2, g1, g2);
    CHECK_THAT(std::norm(xb) + std::norm(xd), WithinRel(std::norm(a1) + std::norm(a2), 1e-12));
    const auto [r1, r2] = inverse_supermode_transform(xb, xd, g1, g2);
    CHECK(std::abs(r1 - a1) <= 1e-12 * std::abs(a1) + 1e-15);
    CHECK(std::abs(r2 - a2) <= 1e-12 * std::abs(a2) + 1e-15);
  }
  CHECK_THROWS_AS(supermode_transform(1.0, 1.0, 0.0, 0.0), DomainError);
}

TEST_CASE("time-averaged amplitude") {
  std::vector<double> t;
  std::vector<cplx> c, r;
  for (int i = 0; i < 100; ++i) {
    t.push_back(i * 0.1);
    c.push_back(cplx(3.0, 4.0));
    r.push_back(std::exp(cplx(0.0, 0.7 * t.back())));
  }
  CHECK_THAT(time_avg_amplitude(t, c, 2.0), WithinRel(5.0, 1e-15));
  CHECK_THAT(time_avg_amplitude(t, r, 0.0), WithinRel(1.0, 1e-14));
  CHECK_THROWS_AS(time_avg_amplitude(t, c, 100.0), DomainError);
}

TEST_CASE("zero-phase low-pass") {
  const double dt = 0.3;
  std::vector<cplx> slow, fast;
  for (int i = 0; i < 20000; ++i) {
    slow.push_back(std::exp(cplx(0.0, -0.01 * i * dt)));
    fast.push_back(std::exp(cplx(0.0, -1.0 * i * dt)));
  }
  const auto ys = lowpass_zero_phase(slow, dt, 0.25);
  const auto yf = lowpass_zero_phase(fast, dt, 0.25);
  for (std::size_t i = 2000; i < 18000; i += 101) {
    REQUIRE(std::abs(ys[i] - slow[i]) < 1e-5);
    REQUIRE(std::abs(yf[i]) < 0.01);
  }
  const std::vector<cplx> dc(500, cplx(2.0, -1.0));
  for (const auto& v : lowpass_zero_phase(dc, dt, 0.25)) REQUIRE(std::abs(v - cplx(2.0, -1.0)) < 1e-12);
}

TEST_CASE("identical resonators without noise leave the dark mode empty") {
  SystemParams p;
  p.gamma1 = p.gamma2 = 1e-3;
  p.drive_h = p.drive_c = 400.0;
  IntegratorConfig c;
  c.dt = 0.02;
  c.t_total = 3000.0;
  c.t_discard = 500.0;
  c.initial = FullState{};
  NoiseSettings n;
  n.enabled = false;
  const auto tr = simulate(p, c, n);
  const auto s = extract_slow_amplitudes(tr);
  double max_b = 0.0, max_d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    max_b = std::max(max_b, std::abs(s.Ab[i]));
    max_d = std::max(max_d, std::abs(s.Ad[i]));
    REQUIRE_THAT(std::norm(s.Ab[i]) + std::norm(s.Ad[i]),
                 WithinRel(std::norm(s.A1[i]) + std::norm(s.A2[i]), 1e-12));
  }
  CHECK(max_b > 1.0);
  CHECK(max_d < 1e-6 * max_b);
}

TEST_CASE("demodulated bright amplitude is slow") {
  SystemParams p;
  p.gamma1 = p.gamma2 = 1e-3;
  p.drive_h = p.drive_c = 400.0;
  IntegratorConfig c;
  c.dt = 0.02;
  c.t_total = 25000.0;
  c.t_discard = 3000.0;
  const auto tr = simulate(p, c, make_noise_settings(p, 11));
  const auto s = extract_slow_amplitudes(tr);
  const auto spec = autocorr_spectrum(s.Ab, s.sample_interval(), 0.0, Detrend::none);
  double total = 0.0, slow = 0.0;
  for (std::size_t i = 0; i < spec.freqs.size(); ++i) {
    total += spec.psd[i];
    if (std::abs(spec.freqs[i]) < p.delta2 / 10.0) slow += spec.psd[i];
  }
  CHECK(slow / total > 0.99);
  const auto smooth = extract_slow_amplitudes(tr, {0.0, true});
  CHECK_THAT(time_avg_amplitude(smooth.times, smooth.Ab, 0.0), WithinRel(time_avg_amplitude(s.times, s.Ab, 0.0), 0.02));
}
