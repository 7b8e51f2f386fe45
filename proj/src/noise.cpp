#include "darkgup/noise.hpp"

#include <cmath>

#include "darkgup/errors.hpp"

namespace darkgup {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_index) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(run_index + 0x632BE59BD9B4E019ULL));
}

NoiseStream::NoiseStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

std::complex<double> NoiseStream::white(double dt, double occupancy) {
  if (!(dt > 0.0)) throw DomainError("noise: dt must be > 0");
  if (occupancy < 0.0) throw DomainError("noise: occupancy must be >= 0");
  const double sd = std::sqrt((occupancy + 0.5) / (2.0 * dt));
  const auto z = standard();
  return {sd * z.real(), sd * z.imag()};
}

std::complex<double> NoiseStream::gaussian(double variance) {
  const double sd = std::sqrt(0.5 * variance);
  const auto z = standard();
  return {sd * z.real(), sd * z.imag()};
}

std::complex<double> gen_complex_white_noise(NoiseStream& stream, double dt, double occupancy) {
  return stream.white(dt, occupancy);
}

}  // namespace darkgup
