#pragma once

#include <vector>

namespace darkgup {

/// Bessel functions of the first kind J_n(x) for all integer orders |n| <= N
/// at one argument, from a single Miller backward recurrence normalised by
/// J_0 + 2 sum J_2k = 1.
class BesselSeries {
 public:
  static constexpr double kMaxArgument = 1e4;

  BesselSeries(int max_order, double x);

  /// J_n(x) for |n| <= max_order(). Negative orders use J_{-n} = (-1)^n J_n.
  double operator()(int n) const;

  int max_order() const { return max_order_; }
  double argument() const { return x_; }

 private:
  int max_order_;
  double x_;
  std::vector<double> values_;  // J_0 .. J_max at x
};

/// Single-value convenience wrapper. Supported range |x| < 1e4, |n| <= 10000.
double bessel_j(int n, double x);

}  // namespace darkgup
