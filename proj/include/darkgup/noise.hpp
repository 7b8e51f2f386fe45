#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace darkgup {

/// Noise configuration of one trajectory. The cavity channel always carries
/// vacuum noise (occupancy 1/2 in the symmetrised correlator).
struct NoiseSettings {
  std::uint64_t seed = 0;
  bool enabled = true;
  double nbar1 = 40.0;
  double nbar2 = 40.0;
};

/// SplitMix64 finaliser. Used as a counter-based generator for per-run seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Independent stream seed for run `run_index` of a sweep started from `master_seed`.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_index);

/// Deterministic stream of complex Gaussian increments.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed);

  /// Increment eta of a delta-correlated channel: real and imaginary parts are
  /// independent N(0, (occupancy + 1/2) / (2 dt)), so <eta_k* eta_l> = (occupancy + 1/2)/dt delta_kl.
  std::complex<double> white(double dt, double occupancy);

  /// Cavity channel: <eta* eta> = 1/(2 dt).
  std::complex<double> vacuum(double dt) { return white(dt, 0.0); }

  /// Complex Gaussian with <|z|^2> = variance.
  std::complex<double> gaussian(double variance);

  /// Independent standard normal real and imaginary parts.
  std::complex<double> standard() {
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {re, im};
  }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;  // ziggurat
};

/// Functional form of the per-step increment draw.
std::complex<double> gen_complex_white_noise(NoiseStream& stream, double dt, double occupancy);

}  // namespace darkgup
