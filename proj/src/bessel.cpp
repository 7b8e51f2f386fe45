#include "darkgup/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "darkgup/errors.hpp"

namespace darkgup {
namespace {

constexpr int kMaxOrder = 10000;
constexpr double kRescaleAbove = 1e250;

// J_0..J_nmax for x > 0.
std::vector<double> miller_sequence(int nmax, double x) {
  const double span = std::max(static_cast<double>(nmax), x);
  int start = static_cast<int>(span) + 30 + static_cast<int>(std::sqrt(60.0 * span));
  start += start % 2;  // even, so the normalisation sum picks J_0, J_2, ...

  std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
  const double two_over_x = 2.0 / x;
  double next = 0.0;      // J_{k+1}
  double current = 1e-300;  // J_k, arbitrary seed
  double norm = 0.0;
  for (int k = start; k >= 1; --k) {
    const double prev = k * two_over_x * current - next;  // J_{k-1}
    next = current;
    current = prev;
    if (std::abs(current) > kRescaleAbove) {
      current /= kRescaleAbove;
      next /= kRescaleAbove;
      norm /= kRescaleAbove;
      for (auto& v : out) v /= kRescaleAbove;
    }
    const int order = k - 1;
    if (order <= nmax) out[static_cast<std::size_t>(order)] = current;
    if (order > 0 && order % 2 == 0) norm += 2.0 * current;
  }
  norm += current;  // J_0
  for (auto& v : out) v /= norm;
  return out;
}

// Ascending series, three terms suffice to double precision for x < 1e-5.
std::vector<double> small_argument_sequence(int nmax, double x) {
  std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
  const double h = 0.5 * x;
  const double h2 = h * h;
  double lead = 1.0;  // (x/2)^n / n!
  for (int n = 0; n <= nmax; ++n) {
    if (n > 0) lead *= h / n;
    if (lead == 0.0) break;
    out[static_cast<std::size_t>(n)] =
        lead * (1.0 - h2 / (n + 1) + h2 * h2 / (2.0 * (n + 1) * (n + 2)));
  }
  return out;
}

}  // namespace

BesselSeries::BesselSeries(int max_order, double x) : max_order_(max_order), x_(x) {
  if (max_order < 0 || max_order > kMaxOrder)
    throw DomainError("BesselSeries: order out of range: " + std::to_string(max_order));
  if (!std::isfinite(x) || std::abs(x) >= kMaxArgument)
    throw DomainError("BesselSeries: argument out of supported range");
  if (x == 0.0) {
    values_.assign(static_cast<std::size_t>(max_order) + 1, 0.0);
    values_[0] = 1.0;
    return;
  }
  const double ax = std::abs(x);
  values_ = ax < 1e-5 ? small_argument_sequence(max_order, ax) : miller_sequence(max_order, ax);
  if (x < 0.0) {
    for (std::size_t n = 1; n < values_.size(); n += 2) values_[n] = -values_[n];
  }
}

double BesselSeries::operator()(int n) const {
  const int m = std::abs(n);
  if (m > max_order_)
    throw DomainError("BesselSeries: order " + std::to_string(n) + " beyond table");
  const double v = values_[static_cast<std::size_t>(m)];
  return (n < 0 && (m % 2 == 1)) ? -v : v;
}

double bessel_j(int n, double x) {
  return BesselSeries(std::abs(n), x)(n);
}

}  // namespace darkgup
