#pragma once

#include <cmath>
#include <stdexcept>

namespace nhqc::model {

/// Largest argument for which J_1 is monotone increasing from zero (first maximum of J_1).
inline constexpr double kBesselJ1Peak = 1.8411837813406593;

/// Bessel function of the first kind J_n(x) for integer n >= 0 and any real x.
inline double bessel_j(int n, double x) {
  if (n < 0) throw std::invalid_argument("bessel_j: order must be non-negative");
  if (x < 0.0) return (n % 2 == 0 ? 1.0 : -1.0) * bessel_j(n, -x);
  return std::cyl_bessel_j(static_cast<double>(n), x);
}

/// J_n for any integer order, using J_{-n}(x) = (-1)^n J_n(x).
inline double bessel_j_signed(int n, double x) {
  if (n >= 0) return bessel_j(n, x);
  return ((-n) % 2 == 0 ? 1.0 : -1.0) * bessel_j(-n, x);
}

/// Modulation depth beta with J_1(beta) = ratio * J_1(beta_ref), by bisection on [0, beta_ref].
inline double solve_beta_for_ratio(double ratio, double beta_ref) {
  if (!(ratio > 0.0) || ratio > 1.0)
    throw std::invalid_argument("solve_beta_for_ratio: ratio must lie in (0, 1]");
  if (!(beta_ref > 0.0) || beta_ref > kBesselJ1Peak + 1e-12)
    throw std::invalid_argument("solve_beta_for_ratio: beta_ref must lie in (0, 1.8412]");
  if (ratio == 1.0) return beta_ref;
  const double target = ratio * bessel_j(1, beta_ref);
  double lo = 0.0;
  double hi = beta_ref;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (bessel_j(1, mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace nhqc::model
