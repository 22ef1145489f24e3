#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace gofkit::special {

template <typename Scalar>
Scalar normal_cdf(Scalar x) {
  using std::erfc;
  return Scalar(0.5) * erfc(-x / std::numbers::sqrt2_v<Scalar>);
}

/// P(Z > x) without cancellation in the upper tail.
template <typename Scalar>
Scalar normal_upper_tail(Scalar x) {
  using std::erfc;
  return Scalar(0.5) * erfc(x / std::numbers::sqrt2_v<Scalar>);
}

/// Normalized Gegenbauer polynomials P_k(t) = C_k^nu(t) / C_k^nu(1) for
/// k = 0..degree_max, written into `out` (resized). Uses
/// P_{k+1} = [2(k+nu) t P_k - k P_{k-1}] / (k + 2 nu), nu > 0.
template <typename Scalar, typename Derived>
void gegenbauer_normalized(int degree_max, Scalar nu, Scalar t,
                           Eigen::PlainObjectBase<Derived>& out) {
  out.resize(degree_max + 1);
  out(0) = Scalar(1);
  if (degree_max == 0) return;
  out(1) = t;
  for (int k = 1; k < degree_max; ++k) {
    out(k + 1) = (Scalar(2) * (k + nu) * t * out(k) - Scalar(k) * out(k - 1)) / (Scalar(k) + Scalar(2) * nu);
  }
}

/// Dimension of the space of degree-k spherical harmonics on S^{d-1}.
double harmonic_dimension(int d, int k);

/// Surface area of S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
double sphere_area(int d);

/// log I_nu(x) for x >= 0, nu >= 0. Direct evaluation where it does not
/// overflow, Hankel asymptotic series beyond.
double log_bessel_i(double nu, double x);

/// Kummer's confluent hypergeometric M(a, b, z). Power series with
/// term-ratio stopping at 1e-15 for |z| <= 50, large-z asymptotic above;
/// negative z through Kummer's transformation M(a,b,z) = e^z M(b-a,b,-z).
double kummer_m(double a, double b, double z);

/// log M(a, b, z); stays finite where M itself overflows.
double log_kummer_m(double a, double b, double z);

}  // namespace gofkit::special
