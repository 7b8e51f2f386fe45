#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "darkgup/errors.hpp"
#include "darkgup/noise.hpp"

using namespace darkgup;

TEST_CASE("vacuum channel variance and mean") {
  NoiseStream s(12345);
  const double dt = 0.02;
  const int n = 1000000;
  double sum_sq = 0.0;
  std::complex<double> sum;
  for (int i = 0; i < n; ++i) {
    const auto eta = s.vacuum(dt);
    sum_sq += std::norm(eta);
    sum += eta;
  }
  const double var = sum_sq / n;
  CHECK(std::abs(var - 1.0 / (2.0 * dt)) < 0.01 / (2.0 * dt));
  const double sigma = std::sqrt(1.0 / (2.0 * dt));
  CHECK(std::abs(sum / static_cast<double>(n)) < 4.0 * sigma / std::sqrt(n));
}

TEST_CASE("thermal channel variance") {
  NoiseStream s(99);
  const double dt = 0.01, nbar = 40.0;
  const int n = 1000000;
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) sum_sq += std::norm(gen_complex_white_noise(s, dt, nbar));
  const double expected = (nbar + 0.5) / dt;
  CHECK(std::abs(sum_sq / n - expected) < 0.01 * expected);
}

TEST_CASE("distinct channels are uncorrelated") {
  NoiseStream s(7);
  const double dt = 0.02;
  const int n = 1000000;
  std::complex<double> cross;
  for (int i = 0; i < n; ++i) {
    const auto e1 = s.white(dt, 40.0);
    const auto e2 = s.white(dt, 40.0);
    cross += std::conj(e1) * e2;
  }
  cross /= static_cast<double>(n);
  const double scale = 40.5 / dt;
  // Each of Re and Im has standard deviation scale / sqrt(2 n).
  CHECK(std::abs(cross.real()) < 5.0 * scale / std::sqrt(2.0 * n));
  CHECK(std::abs(cross.imag()) < 5.0 * scale / std::sqrt(2.0 * n));
}

TEST_CASE("lag-one autocorrelation vanishes") {
  NoiseStream s(8);
  const int n = 1000000;
  std::complex<double> prev = s.white(1.0, 0.0), lag;
  for (int i = 0; i < n; ++i) {
    const auto e = s.white(1.0, 0.0);
    lag += std::conj(prev) * e;
    prev = e;
  }
  CHECK(std::abs(lag / static_cast<double>(n)) < 5.0 * 0.5 / std::sqrt(n));
}

TEST_CASE("streams are reproducible and independent per run index") {
  NoiseStream a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.white(0.1, 1.0);
    CHECK(x == b.white(0.1, 1.0));
    if (x != c.white(0.1, 1.0)) differs = true;
  }
  CHECK(differs);
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(derive_seed(5, i));
  CHECK(seeds.size() == 1000);
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
  CHECK(derive_seed(5, 3) != derive_seed(6, 3));
}

TEST_CASE("gaussian helper variance") {
  NoiseStream s(3);
  const int n = 400000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += std::norm(s.gaussian(40.5));
  CHECK(std::abs(acc / n - 40.5) < 0.02 * 40.5);
}

TEST_CASE("invalid arguments") {
  NoiseStream s(1);
  CHECK_THROWS_AS(s.white(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(s.white(0.1, -1.0), DomainError);
}
