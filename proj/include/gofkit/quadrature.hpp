#pragma once

#include "gofkit/types.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace gofkit {

/// One-dimensional Gauss rule on [-1, 1].
template <typename Scalar = double>
struct GaussRule {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
};

/// Gauss-Legendre nodes and weights by Newton iteration on P_n.
template <typename Scalar = double>
GaussRule<Scalar> gauss_legendre(int n);

/// Gauss-Jacobi rule for the weight (1-t)^alpha (1+t)^beta, alpha, beta > -1,
/// via Golub-Welsch on the symmetric Jacobi matrix.
template <typename Scalar = double>
GaussRule<Scalar> gauss_jacobi(int n, Scalar alpha, Scalar beta);

extern template GaussRule<double> gauss_legendre<double>(int);
extern template GaussRule<long double> gauss_legendre<long double>(int);
extern template GaussRule<double> gauss_jacobi<double>(int, double, double);
extern template GaussRule<long double> gauss_jacobi<long double>(int, long double, long double);

/// Discrete approximation of P0: weighted nodes in a domain.
struct Quadrature {
  Points nodes;             // N x d
  Eigen::VectorXd weights;  // nonnegative, sum 1
  Domain domain;

  Eigen::Index size() const { return nodes.rows(); }
  /// Throws ValidationError unless weights >= 0, sum to 1 +- 1e-12 and nodes
  /// lie in the domain.
  void validate() const;
};

/// Gauss-Legendre rule mapped to [0, 1] with weights summing to one.
Quadrature uniform_interval_quadrature(int nodes);

/// i.i.d. uniform draws on the domain with equal weights.
Quadrature monte_carlo_quadrature(const Domain& domain, int nodes, std::uint64_t seed);

}  // namespace gofkit
