#include "gofkit/special.hpp"

#include "gofkit/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace gofkit::special {

double harmonic_dimension(int d, int k) {
  require(d >= 2 && k >= 0, "harmonic_dimension: need d >= 2, k >= 0");
  if (k == 0) return 1.0;
  if (d == 2) return 2.0;
  // (2k + d - 2) / (k + d - 2) * binom(k + d - 2, k)
  const double log_binom = std::lgamma(k + d - 1.0) - std::lgamma(k + 1.0) - std::lgamma(d - 1.0);
  return std::round((2.0 * k + d - 2.0) / (k + d - 2.0) * std::exp(log_binom));
}

double sphere_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
}

double log_bessel_i(double nu, double x) {
  require(x >= 0.0 && nu >= 0.0, "log_bessel_i: need nu >= 0, x >= 0");
  if (x == 0.0) return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (x < 500.0) return std::log(std::cyl_bessel_i(nu, x));
  // I_nu(x) ~ e^x / sqrt(2 pi x) * sum_k (-1)^k a_k(nu) / x^k
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 30; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(sum);
}

namespace {

constexpr double kAsymptoticSwitch = 50.0;

// log M(a, b, z), z >= 0.
double log_kummer_nonneg(double a, double b, double z) {
  if (z <= kAsymptoticSwitch) {
    double term = 1.0;
    double sum = 1.0;
    for (int s = 0; s < 100000; ++s) {
      term *= (a + s) / (b + s) * z / (s + 1.0);
      sum += term;
      if (std::abs(term) <= 1e-15 * std::abs(sum)) break;
    }
    return std::log(sum);
  }
  // M(a,b,z) ~ Gamma(b)/Gamma(a) e^z z^{a-b} sum_s (b-a)_s (1-a)_s / s! z^-s
  double term = 1.0;
  double sum = 1.0;
  for (int s = 0; s < 200; ++s) {
    const double next = term * (b - a + s) * (1.0 - a + s) / ((s + 1.0) * z);
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) <= 1e-16 * std::abs(sum)) break;
  }
  return std::lgamma(b) - std::lgamma(a) + z + (a - b) * std::log(z) + std::log(sum);
}

}  // namespace

double log_kummer_m(double a, double b, double z) {
  require(b > 0.0 && a > 0.0, "kummer_m: need a > 0, b > 0");
  if (z >= 0.0) return log_kummer_nonneg(a, b, z);
  require(b - a > 0.0, "kummer_m: negative argument needs b > a");
  return z + log_kummer_nonneg(b - a, b, -z);
}

double kummer_m(double a, double b, double z) { return std::exp(log_kummer_m(a, b, z)); }

}  // namespace gofkit::special
