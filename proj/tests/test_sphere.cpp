#include "gofkit/error.hpp"
#include "gofkit/rng.hpp"
#include "gofkit/special.hpp"
#include "gofkit/spectrum.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace gofkit;

namespace {

Eigen::RowVectorXd random_unit(int d, Rng& rng) {
  std::normal_distribution<double> z;
  Eigen::RowVectorXd x(d);
  for (int j = 0; j < d; ++j) x(j) = z(rng);
  return x.normalized();
}

// Real spherical harmonics on S^2 from std::sph_legendre, normalized for
// the surface area measure.
double real_harmonic(int l, int m, const Eigen::RowVectorXd& x) {
  const double theta = std::acos(std::clamp(x(2), -1.0, 1.0));
  const double phi = std::atan2(x(1), x(0));
  if (m == 0) return std::sph_legendre(l, 0, theta);
  const double base = std::numbers::sqrt2 * std::sph_legendre(l, std::abs(m), theta);
  return m > 0 ? base * std::cos(m * phi) : base * std::sin(-m * phi);
}

}  // namespace

TEST(ZonalSpectrum, ConstantProfile) {
  const ZonalSpectrum s = sphere_zonal_spectrum([](double) { return 1.0; }, 3, 6);
  EXPECT_NEAR(s.degree_eigenvalues(0), 1.0, 1e-14);
  for (int k = 1; k <= 6; ++k) EXPECT_NEAR(s.degree_eigenvalues(k), 0.0, 1e-14);
  EXPECT_THROW(sphere_basis(s), ValidationError);
}

TEST(ZonalSpectrum, GaussianProfileEigenvalues) {
  // lambda_k = 1/2 int_{-1}^{1} exp(-2(1-t)) P_k(t) dt, by adaptive quadrature.
  const ZonalSpectrum s = sphere_zonal_spectrum([](double t) { return std::exp(-2.0 * (1.0 - t)); }, 3, 10);
  EXPECT_NEAR(s.degree_eigenvalues(0), 0.245421090277816, 1e-13);
  EXPECT_NEAR(s.degree_eigenvalues(2), 0.0476185434029035, 1e-13);
  EXPECT_NEAR(s.degree_eigenvalues(5), 0.000485156460212754, 1e-13);
  EXPECT_NEAR(s.degree_eigenvalues(10), 1.09916924463631e-8, 1e-13);
  for (int k = 0; k <= 10; ++k) EXPECT_EQ(s.multiplicities(k), 2 * k + 1);
}

TEST(ZonalSpectrum, ReconstructionOnRandomPairs) {
  auto g = [](double t) { return std::exp(-2.0 * (1.0 - t)); };
  const ZonalSpectrum s = sphere_zonal_spectrum(g, 3, 10);
  Rng rng = make_rng(11, {});
  for (int i = 0; i < 100; ++i) {
    const double t = random_unit(3, rng).dot(random_unit(3, rng));
    EXPECT_NEAR(zonal_eval(s, t), g(t), 1e-6);
  }
}

TEST(ZonalSpectrum, HigherDimensionReconstruction) {
  auto g = [](double t) { return std::exp(-(1.0 - t)); };
  const ZonalSpectrum s = sphere_zonal_spectrum(g, 5, 14);
  for (double t : {-1.0, -0.4, 0.0, 0.7, 1.0}) EXPECT_NEAR(zonal_eval(s, t), g(t), 1e-9);
}

TEST(ZonalMap, DiagonalBlocksEqualMultiplicity) {
  const ZonalMap map(3, {1, 2, 3, 4});
  const Eigen::RowVectorXd x = Eigen::RowVector3d(0.0, 0.6, 0.8);
  const Eigen::VectorXd terms = map.pair_terms(x, x);
  for (int k = 1; k <= 4; ++k) EXPECT_NEAR(terms(k - 1), 2 * k + 1, 1e-12);
}

TEST(ZonalMap, AdditionTheoremMatchesExplicitHarmonics) {
  std::vector<int> degrees(10);
  for (int k = 1; k <= 10; ++k) degrees[k - 1] = k;
  const ZonalMap map(3, degrees);
  Rng rng = make_rng(5, {});
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::RowVectorXd x = random_unit(3, rng), y = random_unit(3, rng);
    const Eigen::VectorXd terms = map.pair_terms(x, y);
    for (int l = 1; l <= 10; ++l) {
      double explicit_sum = 0.0;
      for (int m = -l; m <= l; ++m) explicit_sum += real_harmonic(l, m, x) * real_harmonic(l, m, y);
      EXPECT_NEAR(terms(l - 1), 4.0 * std::numbers::pi * explicit_sum, 1e-8);
    }
  }
}

TEST(ZonalMap, MomentsMatchPairSums) {
  const ZonalMap map(4, {1, 2, 3});
  Rng rng = make_rng(9, {});
  Points x(7, 4);
  for (int i = 0; i < 7; ++i) x.row(i) = random_unit(4, rng);
  const SampleMoments m = map.moments(x);
  Eigen::VectorXd mean_sq = Eigen::VectorXd::Zero(3), diag = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 7; ++i) {
    diag += map.pair_terms(x.row(i), x.row(i)) / 7.0;
    for (int j = 0; j < 7; ++j) mean_sq += map.pair_terms(x.row(i), x.row(j)) / 49.0;
  }
  EXPECT_LE((m.mean_sq - mean_sq).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((m.diag - diag).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SphereBasis, DropsDegreeZeroAndIsDegenerate) {
  const ZonalSpectrum s = sphere_zonal_spectrum([](double t) { return std::exp(-2.0 * (1.0 - t)); }, 3, 10);
  const SpectralBasis basis = sphere_basis(s, "gaussian:bw=1");
  EXPECT_TRUE(basis.degenerate());
  EXPECT_EQ(basis.blocks(), 10);
  EXPECT_EQ(basis.truncation(), 120);  // sum_{k=1}^{10} (2k + 1)
  EXPECT_NEAR(basis.eigenvalues()(0), s.degree_eigenvalues(1), 0.0);
  // Centered kernel at x = y: g(1) minus the degree-0 term.
  const Eigen::RowVectorXd x = Eigen::RowVector3d(1.0, 0.0, 0.0);
  EXPECT_NEAR(eval_truncated(basis, x, x), 1.0 - s.degree_eigenvalues(0), 1e-6);
}

TEST(SphereBasis, DegreeCapBeyondRoundOffStopsAtNoiseFloor) {
  // Degrees past ~15 are Funk-Hecke round-off and must not be kept.
  const ZonalSpectrum s = sphere_zonal_spectrum([](double t) { return std::exp(-2.0 * (1.0 - t)); }, 3, 24);
  const SpectralBasis basis = sphere_basis(s, "gaussian:bw=1");
  EXPECT_EQ(basis.blocks(), 14);
  for (Eigen::Index b = 1; b < basis.blocks(); ++b) EXPECT_LT(basis.eigenvalues()(b), basis.eigenvalues()(b - 1));
}

TEST(SphereBasis, RequiresAmbientDimensionThree) {
  EXPECT_THROW(sphere_zonal_spectrum([](double) { return 1.0; }, 2, 4), ValidationError);
}
