#include "gofkit/quadrature.hpp"

#include "gofkit/error.hpp"
#include "gofkit/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace gofkit {

template <typename Scalar>
GaussRule<Scalar> gauss_legendre(int n) {
  require(n >= 1, "gauss_legendre: need n >= 1");
  GaussRule<Scalar> rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon() * 4;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    Scalar z = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar pp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Scalar p1 = 1, p2 = 0;
      for (int j = 1; j <= n; ++j) {
        const Scalar p3 = p2;
        p2 = p1;
        p1 = ((Scalar(2 * j) - 1) * z * p2 - Scalar(j - 1) * p3) / Scalar(j);
      }
      pp = Scalar(n) * (z * p1 - p2) / (z * z - 1);
      const Scalar z_old = z;
      z = z_old - p1 / pp;
      if (std::abs(z - z_old) <= eps) break;
    }
    const Scalar w = Scalar(2) / ((1 - z * z) * pp * pp);
    rule.nodes(i) = -z;
    rule.nodes(n - 1 - i) = z;
    rule.weights(i) = w;
    rule.weights(n - 1 - i) = w;
  }
  return rule;
}

template <typename Scalar>
GaussRule<Scalar> gauss_jacobi(int n, Scalar alpha, Scalar beta) {
  require(n >= 1, "gauss_jacobi: need n >= 1");
  require(alpha > -1 && beta > -1, "gauss_jacobi: need alpha, beta > -1");
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Scalar ab = alpha + beta;
  Vec diag(n);
  Vec sub(std::max(n - 1, 0));
  diag(0) = (beta - alpha) / (ab + 2);
  for (int k = 1; k < n; ++k) {
    const Scalar two_k = Scalar(2 * k) + ab;
    diag(k) = (beta * beta - alpha * alpha) / (two_k * (two_k + 2));
    Scalar b2;
    if (k == 1) {
      b2 = 4 * (1 + alpha) * (1 + beta) / ((2 + ab) * (2 + ab) * (3 + ab));
    } else {
      b2 = 4 * Scalar(k) * (k + alpha) * (k + beta) * (k + ab) / (two_k * two_k * (two_k + 1) * (two_k - 1));
    }
    sub(k - 1) = std::sqrt(b2);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericError("gauss_jacobi: eigen solver failed");
  const Scalar log_mu0 = (ab + 1) * std::log(Scalar(2)) + std::lgamma(alpha + 1) + std::lgamma(beta + 1) -
                         std::lgamma(ab + 2);
  const Scalar mu0 = std::exp(log_mu0);
  GaussRule<Scalar> rule;
  rule.nodes = solver.eigenvalues();
  rule.weights = mu0 * solver.eigenvectors().row(0).transpose().array().square();
  return rule;
}

template GaussRule<double> gauss_legendre<double>(int);
template GaussRule<long double> gauss_legendre<long double>(int);
template GaussRule<double> gauss_jacobi<double>(int, double, double);
template GaussRule<long double> gauss_jacobi<long double>(int, long double, long double);

void Quadrature::validate() const {
  require(nodes.rows() >= 1, "quadrature: no nodes");
  require(weights.size() == nodes.rows(), "quadrature: weight count differs from node count");
  require((weights.array() >= 0.0).all(), "quadrature: negative weight");
  const double total = weights.sum();
  if (std::abs(total - 1.0) > 1e-12) {
    throw ValidationError("quadrature: weights sum to " + std::to_string(total) + ", expected 1");
  }
  domain.check_points(nodes, "quadrature");
}

Quadrature uniform_interval_quadrature(int nodes) {
  // Long double nodes keep the mapped weights summing to one within 1e-12
  // for large rules.
  const auto rule = gauss_legendre<long double>(nodes);
  Quadrature q;
  q.domain = Domain{Geometry::cube, 1};
  q.nodes.resize(nodes, 1);
  q.weights.resize(nodes);
  long double total = 0;
  for (int i = 0; i < nodes; ++i) total += rule.weights(i);
  for (int i = 0; i < nodes; ++i) {
    q.nodes(i, 0) = static_cast<double>((rule.nodes(i) + 1.0L) / 2.0L);
    q.weights(i) = static_cast<double>(rule.weights(i) / total);
  }
  return q;
}

Quadrature monte_carlo_quadrature(const Domain& domain, int nodes, std::uint64_t seed) {
  require(nodes >= 1, "monte_carlo_quadrature: need at least one node");
  Rng rng(derive_seed(seed, {hash_label("mc-quadrature")}));
  Quadrature q;
  q.domain = domain;
  q.nodes.resize(nodes, domain.dim);
  if (domain.geometry == Geometry::cube) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < nodes; ++i)
      for (int j = 0; j < domain.dim; ++j) q.nodes(i, j) = unif(rng);
  } else {
    std::normal_distribution<double> normal;
    for (int i = 0; i < nodes; ++i) {
      for (int j = 0; j < domain.dim; ++j) q.nodes(i, j) = normal(rng);
      q.nodes.row(i).normalize();
    }
  }
  q.weights = Eigen::VectorXd::Constant(nodes, 1.0 / nodes);
  return q;
}

}  // namespace gofkit
