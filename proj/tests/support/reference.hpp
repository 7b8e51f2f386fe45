#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "darkgup/units.hpp"

// Independent reference implementations used as test oracles.

namespace ref {

using cplx = std::complex<double>;

/// Ascending power series for J_n(x), long double accumulation. Reliable for |x| <~ 20.
double bessel_series(int n, double x);

/// RK4 integration of the cavity equation with the bright mode moving as
/// |A_b| e^{-i(delta2 t - theta)} (static offsets absorbed into delta1).
/// Starts from a = 0 and returns samples on [t0, t0 + duration] every `sample_dt`.
struct CavitySamples {
  std::vector<double> t;
  std::vector<cplx> a;
};
CavitySamples prescribed_cavity(double abs_Ab, double theta, const darkgup::SystemParams& p, double t0,
                                double duration, double sample_dt, int substeps);

/// Exact-update complex Ornstein-Uhlenbeck process
/// x' = (-i w0 - g) x + sqrt(2 g) eta, <eta* eta> = (n + 1/2) delta, sampled every dt.
std::vector<cplx> ornstein_uhlenbeck(double w0, double gamma, double occupancy, double dt, std::size_t n,
                                     std::uint64_t seed);

/// Two-sided PSD of the OU process above in the convention S(w) = int <x*(0) x(t)> e^{i w t} dt.
double ou_psd(double w, double w0, double gamma, double occupancy);

/// Independent sample-based Student t quantile by bisection on the regularized incomplete beta.
double student_t_quantile(double p, double dof);

}  // namespace ref
