#include "gofkit/error.hpp"
#include "gofkit/rng.hpp"
#include "gofkit/spectrum.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace gofkit;

namespace {

SpectralBasis factor_with(const Eigen::VectorXd& lambda) {
  const Eigen::Index K = lambda.size();
  auto map = std::make_shared<FunctionMap>(
      [](const Points& x, Eigen::Index k) {
        Eigen::MatrixXd out(x.rows(), k);
        for (Eigen::Index i = 0; i < x.rows(); ++i)
          for (Eigen::Index j = 0; j < k; ++j)
            out(i, j) = std::numbers::sqrt2 * std::cos(static_cast<double>(j + 1) * std::numbers::pi * x(i, 0));
        return out;
      },
      Eigen::VectorXd::Constant(K, std::numbers::sqrt2));
  return SpectralBasis(lambda, map, Domain{Geometry::cube, 1}, true, "test-factor");
}

// All (K+1)^d multi-indices sorted by the shared candidate ordering.
std::vector<TensorCandidate> exhaustive(const Eigen::VectorXd& lambda, int d, double c0) {
  const int L = static_cast<int>(lambda.size()) + 1;
  std::vector<TensorCandidate> all;
  std::vector<int> idx(d, 0);
  while (true) {
    double v = 1.0;
    for (int k : idx) v *= k == 0 ? c0 : lambda(k - 1);
    if (std::any_of(idx.begin(), idx.end(), [](int k) { return k != 0; })) all.push_back({v, idx});
    int j = d - 1;
    while (j >= 0 && ++idx[j] == L) idx[j--] = 0;
    if (j < 0) break;
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return b < a; });
  return all;
}

}  // namespace

TEST(Tensor, DimensionOneIsTruncatedFactor) {
  Eigen::VectorXd lambda(4);
  lambda << 0.5, 0.2, 0.1, 0.05;
  const SpectralBasis t = tensor_product_basis(factor_with(lambda), 1, 3);
  EXPECT_EQ(t.eigenvalues(), lambda.head(3));
}

TEST(Tensor, TwoDimensionalExample) {
  Eigen::VectorXd lambda(2);
  lambda << 0.4, 0.1;
  const SpectralBasis t = tensor_product_basis(factor_with(lambda), 2, 5);
  Eigen::VectorXd expected(5);
  expected << 0.4, 0.4, 0.16, 0.1, 0.1;
  EXPECT_LE((t.eigenvalues() - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Tensor, TopProductPairsLargestFactorWithConstants) {
  Eigen::VectorXd lambda(3);
  lambda << 0.3, 0.2, 0.05;
  for (int d : {2, 3, 6}) {
    const SpectralBasis t = tensor_product_basis(factor_with(lambda), d, 1);
    EXPECT_DOUBLE_EQ(t.eigenvalues()(0), 0.3);
  }
}

TEST(Tensor, MatchesExhaustiveEnumeration) {
  Rng rng = make_rng(3, {});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int d = 1; d <= 3; ++d) {
    for (int trial = 0; trial < 3; ++trial) {
      Eigen::VectorXd lambda(6);
      for (int k = 0; k < 6; ++k) lambda(k) = u(rng);
      std::sort(lambda.data(), lambda.data() + 6, std::greater<>());
      const auto all = exhaustive(lambda, d, 1.0);
      const Eigen::Index K = std::min<Eigen::Index>(50, static_cast<Eigen::Index>(all.size()));
      const SpectralBasis t = tensor_product_basis(factor_with(lambda), d, K);
      const auto& map = dynamic_cast<const TensorMap&>(t.map());
      for (Eigen::Index b = 0; b < K; ++b) {
        EXPECT_DOUBLE_EQ(t.eigenvalues()(b), all[b].value);
        for (int j = 0; j < d; ++j) EXPECT_EQ(map.multi_indices()(b, j), all[b].index[j]);
      }
    }
  }
}

TEST(Tensor, FeaturesAreCoordinateProducts) {
  Eigen::VectorXd lambda(3);
  lambda << 0.3, 0.2, 0.05;
  const SpectralBasis factor = factor_with(lambda);
  const SpectralBasis t = tensor_product_basis(factor, 3, 12);
  const auto& map = dynamic_cast<const TensorMap&>(t.map());
  Points x(2, 3);
  x << 0.1, 0.5, 0.9, 0.33, 0.71, 0.02;
  const Eigen::MatrixXd features = t.features(x);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index b = 0; b < 12; ++b) {
      double expected = 1.0;
      for (int j = 0; j < 3; ++j) {
        const int k = map.multi_indices()(b, j);
        if (k > 0) expected *= std::numbers::sqrt2 * std::cos(k * std::numbers::pi * x(i, j));
      }
      EXPECT_NEAR(features(i, b), expected, 1e-12);
    }
}

TEST(Tensor, FrontierBudget) {
  Eigen::VectorXd lambda(50);
  for (int k = 0; k < 50; ++k) lambda(k) = 1.0 / (k + 1.0);
  EXPECT_THROW(tensor_product_basis(factor_with(lambda), 8, 5000, {.frontier_budget = 100}), ValidationError);
}

TEST(Tensor, TooManyRequested) {
  Eigen::VectorXd lambda(2);
  lambda << 0.4, 0.1;
  // The 3 x 3 lattice has 8 non-constant indices.
  EXPECT_THROW(tensor_product_basis(factor_with(lambda), 2, 9), ValidationError);
}
