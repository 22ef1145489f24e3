#include "gofkit/dists.hpp"
#include "gofkit/error.hpp"
#include "gofkit/quadrature.hpp"
#include "gofkit/special.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace gofkit;

namespace {

constexpr double kPi = std::numbers::pi;

Points uniform_points(const Domain& dom, long n, std::uint64_t seed) {
  return monte_carlo_quadrature(dom, static_cast<int>(n), seed).nodes;
}

double mean_of(const Eigen::VectorXd& v) { return v.mean(); }
double se_of(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

// Five fixed test functions of a point.
Eigen::VectorXd probes(PointRef x) {
  const double a = x(0);
  const double b = x(x.size() - 1);
  Eigen::VectorXd out(5);
  out << a, a * a, std::cos(3.0 * a), a * b, std::exp(b);
  return out;
}

}  // namespace

// --- Samplers ------------------------------------------------------------------------------

TEST(Sample, VmfZeroConcentrationIsUniform) {
  const auto spec = AlternativeSpec::parse("vmf:d=3,kappa=0");
  const long n = 10000;
  const Sample s = sample(spec, n, 11);
  const double resultant = s.points().colwise().mean().norm();
  EXPECT_LE(resultant, 3.0 / std::sqrt(static_cast<double>(n)));
  for (Eigen::Index i = 0; i < n; ++i) ASSERT_NEAR(s.point(i).norm(), 1.0, 1e-12);
}

TEST(Sample, SpectralAcceptanceRate) {
  const auto spec = AlternativeSpec::parse("spectral:a=0.3");
  SamplerStats stats;
  Rng rng = make_rng(5, {});
  long total = 0;
  while (stats.proposals < 100000) {
    total += sample(spec, 5000, rng, &stats).size();
  }
  EXPECT_EQ(stats.accepted, total);
  const double rate = static_cast<double>(stats.accepted) / static_cast<double>(stats.proposals);
  EXPECT_NEAR(rate, 1.0 / (1.0 + 0.3 * std::numbers::sqrt2), 0.01);
  EXPECT_NEAR(1.0 / (1.0 + 0.3 * std::numbers::sqrt2), 0.7021, 1e-4);
}

TEST(Sample, OneComponentMixtureIsGaussian) {
  const auto spec = AlternativeSpec::parse("gaussian-mixture:d=2,means=0.4;0.6,scale=0.05");
  const long n = 20000;
  const Sample s = sample(spec, n, 3);
  const Eigen::RowVectorXd mean = s.points().colwise().mean();
  // Truncation at 8 sd is invisible at this scale.
  const double se_mean = 0.05 / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(mean(0), 0.4, 3.0 * se_mean);
  EXPECT_NEAR(mean(1), 0.6, 3.0 * se_mean);
  for (int j = 0; j < 2; ++j) {
    const double var = (s.points().col(j).array() - mean(j)).square().sum() / (n - 1);
    const double se_var = 0.05 * 0.05 * std::sqrt(2.0 / (n - 1));
    EXPECT_NEAR(var, 0.0025, 3.0 * se_var);
  }
}

TEST(Sample, DeterministicGivenSeed) {
  for (const char* text : {"gaussian-mixture:d=3,k=5,seed=2", "marron-wand:asymmetric-claw:d=2", "watson:d=4,kappa=3",
                           "sphere-mixture:d=3,kappa=4,k=3,seed=1", "spectral:a=0.2;-0.1,weight=0.5"}) {
    const auto spec = AlternativeSpec::parse(text);
    EXPECT_EQ(sample(spec, 50, 9).points(), sample(spec, 50, 9).points()) << text;
    EXPECT_NE(sample(spec, 50, 9).points(), sample(spec, 50, 10).points()) << text;
  }
}

TEST(Sample, StaysInDomain) {
  for (const char* text : {"gaussian-mixture:d=3,k=5,seed=2", "marron-wand:smooth-comb:d=4", "vmf:d=5,kappa=20",
                           "watson:d=3,kappa=0.5", "uniform-sphere:d=2", "spectral:a=0.3;0.2;0.1"}) {
    const auto spec = AlternativeSpec::parse(text);
    const Sample s = sample(spec, 500, 1);
    EXPECT_NO_THROW(spec.domain().check_points(s.points(), "sample")) << text;
  }
}

TEST(Sample, SpectralMomentIdentity) {
  const auto spec = AlternativeSpec::parse("spectral:a=0.3;-0.2;0.1");
  const long n = 100000;
  const Sample s = sample(spec, n, 21);
  const Eigen::RowVectorXd means = spec.basis->features(s.points()).colwise().mean();
  for (Eigen::Index k = 0; k < 3; ++k) {
    EXPECT_NEAR(means(k), spec.coefficients(k), 4.0 / std::sqrt(static_cast<double>(n)) * std::numbers::sqrt2);
  }
}

TEST(Sample, ContaminationFraction) {
  // Only the family component puts mass near the centre at this scale.
  const auto spec = AlternativeSpec::parse("gaussian-mixture:d=1,means=0.5,scale=0.001,weight=0.3");
  const long n = 20000;
  const Sample s = sample(spec, n, 4);
  const double near = (s.points().col(0).array() - 0.5).abs().cast<double>().unaryExpr([](double v) {
                        return v < 0.01 ? 1.0 : 0.0;
                      }).mean();
  const double expected = 0.3 + 0.7 * 0.02;
  EXPECT_NEAR(near, expected, 4.0 * std::sqrt(expected * (1 - expected) / n));
}

TEST(Sample, SamplerMatchesDensity) {
  const char* cube_specs[] = {"gaussian-mixture:d=2,k=3,scale=0.1,seed=1", "marron-wand:skewed-unimodal:d=2",
                              "marron-wand:asymmetric-claw:d=2", "marron-wand:smooth-comb:d=2",
                              "spectral:a=0.3;-0.25", "marron-wand:skewed-unimodal:d=2,weight=0.4"};
  const char* sphere_specs[] = {"vmf:d=3,kappa=2,mu=0.6;0;0.8", "watson:d=3,kappa=2", "watson:d=4,kappa=-0",
                                "sphere-mixture:d=3,kappa=5,k=2,seed=3", "vmf:d=5,kappa=4"};
  const long n = 20000;
  const GaussRule<double> gl = gauss_legendre<double>(96);
  for (const char* text : cube_specs) {
    const auto spec = AlternativeSpec::parse(text);
    const Sample s = sample(spec, n, 17);
    Eigen::MatrixXd values(n, 5);
    for (long i = 0; i < n; ++i) values.row(i) = probes(s.point(i)).transpose();
    Eigen::VectorXd exact = Eigen::VectorXd::Zero(5);
    Eigen::RowVectorXd x(spec.dim);
    if (spec.dim == 1) {
      for (Eigen::Index a = 0; a < gl.nodes.size(); ++a) {
        x(0) = 0.5 * (gl.nodes(a) + 1.0);
        exact += 0.5 * gl.weights(a) * density(spec, x) * probes(x);
      }
    } else {
      for (Eigen::Index a = 0; a < gl.nodes.size(); ++a) {
        for (Eigen::Index b = 0; b < gl.nodes.size(); ++b) {
          x << 0.5 * (gl.nodes(a) + 1.0), 0.5 * (gl.nodes(b) + 1.0);
          exact += 0.25 * gl.weights(a) * gl.weights(b) * density(spec, x) * probes(x);
        }
      }
    }
    for (int f = 0; f < 5; ++f) {
      const Eigen::VectorXd col = values.col(f);
      EXPECT_NEAR(mean_of(col), exact(f), 4.0 * se_of(col)) << text << " probe " << f;
    }
  }
  for (const char* text : sphere_specs) {
    const auto spec = AlternativeSpec::parse(text);
    const Sample s = sample(spec, n, 17);
    const long m = 400000;
    const Points u = uniform_points(spec.domain(), m, 99);
    const double area = special::sphere_area(spec.dim);
    Eigen::MatrixXd weighted(m, 5);
    for (long i = 0; i < m; ++i) weighted.row(i) = (area * density(spec, u.row(i)) * probes(u.row(i))).transpose();
    for (int f = 0; f < 5; ++f) {
      Eigen::VectorXd col(n);
      for (long i = 0; i < n; ++i) col(i) = probes(s.point(i))(f);
      const Eigen::VectorXd ref = weighted.col(f);
      const double tol = 4.0 * std::hypot(se_of(col), se_of(ref));
      EXPECT_NEAR(mean_of(col), mean_of(ref), tol) << text << " probe " << f;
    }
  }
}

TEST(Sample, VmfRotationalSymmetry) {
  Eigen::VectorXd mu(3);
  mu << 1.0, 2.0, 2.0;
  mu /= 3.0;
  AlternativeSpec spec = AlternativeSpec::parse("vmf:d=3,kappa=3");
  spec.mu = mu;
  const long n = 20000;
  const Sample s = sample(spec, n, 31);
  // Orthonormal frame of the tangent plane at mu.
  Eigen::Vector3d m = mu;
  Eigen::Vector3d e1 = m.unitOrthogonal();
  Eigen::Vector3d e2 = m.cross(e1);
  const int bins = 10;
  std::vector<double> counts(bins, 0.0);
  for (long i = 0; i < n; ++i) {
    const Eigen::Vector3d x = s.point(i).transpose();
    const double angle = std::atan2(x.dot(e2), x.dot(e1)) + kPi;
    counts[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>(angle / (2 * kPi) * bins)))] += 1.0;
  }
  const double expected = static_cast<double>(n) / bins;
  double stat = 0.0;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  EXPECT_LT(stat, 21.665994333461924);  // chi-square(9) upper 1% point
}

TEST(Sample, WatsonAntipodalBalance) {
  const auto spec = AlternativeSpec::parse("watson:d=3,kappa=4");
  const long n = 20000;
  const Sample s = sample(spec, n, 8);
  const double positive = (s.points().col(2).array() > 0.0).cast<double>().mean();
  EXPECT_NEAR(positive, 0.5, 4.0 * 0.5 / std::sqrt(static_cast<double>(n)));
  // Concentrated along the axis.
  EXPECT_GT(s.points().col(2).array().square().mean(), 1.0 / 3.0 + 0.2);
}

// --- Densities -----------------------------------------------------------------------------

TEST(Density, VmfMode) {
  const auto spec = AlternativeSpec::parse("vmf:d=3,kappa=1");
  EXPECT_NEAR(density(spec, spec.mu.transpose()), 0.184065499616596, 1e-12);
  EXPECT_NEAR(density(spec, spec.mu.transpose()), std::exp(1.0) / (4 * kPi * std::sinh(1.0)), 1e-13);
}

TEST(Density, WatsonUniformLimitAndSymmetry) {
  const auto flat = AlternativeSpec::parse("watson:d=3,kappa=0");
  Eigen::RowVectorXd x(3);
  x << 0.48, 0.6, 0.64;
  EXPECT_NEAR(density(flat, x), 1.0 / (4 * kPi), 1e-14);
  EXPECT_NEAR(density(flat, x), 0.079577, 1e-6);
  const auto peaked = AlternativeSpec::parse("watson:d=3,kappa=2,mu=0;0.6;0.8");
  EXPECT_EQ(density(peaked, x), density(peaked, -x));
}

TEST(Density, LogNormalizers) {
  // mpmath: log of kappa^{d/2-1}/((2 pi)^{d/2} I_{d/2-1}(kappa)) and of
  // Gamma(d/2)/(2 pi^{d/2} M(1/2, d/2, kappa)).
  EXPECT_NEAR(vmf_log_normalizer(5, 3.0), -4.07800970376580362, 1e-12);
  EXPECT_NEAR(watson_log_normalizer(4, 7.0), -6.64163302229093378, 1e-10);
  EXPECT_NEAR(vmf_log_normalizer(4, 0.0), -std::log(special::sphere_area(4)), 1e-14);
}

TEST(Density, IntegratesToOneOnInterval) {
  const Quadrature q = uniform_interval_quadrature(2048);
  for (const char* text : {"marron-wand:skewed-unimodal:d=1", "marron-wand:asymmetric-claw:d=1",
                           "marron-wand:smooth-comb:d=1", "gaussian-mixture:d=1,k=5,seed=4",
                           "spectral:a=0.3;0.4", "gaussian-mixture:d=1,means=0.02,scale=0.05,weight=0.5"}) {
    const auto spec = AlternativeSpec::parse(text);
    double total = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) total += q.weights(i) * density(spec, q.nodes.row(i));
    EXPECT_NEAR(total, 1.0, 1e-6) << text;
  }
}

TEST(Density, IntegratesToOneOnSphere) {
  for (const char* text : {"vmf:d=3,kappa=1", "watson:d=3,kappa=2", "vmf:d=5,kappa=2", "watson:d=5,kappa=3",
                           "sphere-mixture:d=4,family=watson,kappa=1,k=2,seed=5"}) {
    const auto spec = AlternativeSpec::parse(text);
    const long m = 200000;
    const Points u = uniform_points(spec.domain(), m, 3);
    const double area = special::sphere_area(spec.dim);
    double total = 0.0;
    for (long i = 0; i < m; ++i) total += density(spec, u.row(i));
    EXPECT_NEAR(area * total / m, 1.0, 0.01) << text;
  }
}

TEST(Density, OutsideCubeIsZero) {
  const auto spec = AlternativeSpec::parse("marron-wand:skewed-unimodal:d=2");
  Eigen::RowVectorXd x(2);
  x << 0.5, 1.2;
  EXPECT_EQ(density(spec, x), 0.0);
}

// --- Chi-square --------------------------------------------------------------------------

TEST(ChiSquare, SpectralParseval) {
  EXPECT_DOUBLE_EQ(chi_square_divergence(AlternativeSpec::parse("spectral:a=0.3"), "uniform-cube:d=1").value, 0.09);
  const auto two = AlternativeSpec::parse("spectral:a=0.3;0.4");
  EXPECT_NEAR(chi_square_divergence(two, "uniform-cube:d=1").value, 0.25, 1e-15);
  const DivergenceEstimate q = chi_square_divergence_quadrature(two);
  EXPECT_NEAR(q.value, 0.25, 1e-6);
  EXPECT_LT(q.error, 1e-6);
}

TEST(ChiSquare, NullIsZero) {
  EXPECT_EQ(chi_square_divergence(AlternativeSpec::parse("uniform-cube:d=4"), "uniform-cube:d=4").value, 0.0);
  EXPECT_EQ(chi_square_divergence(AlternativeSpec::parse("uniform-sphere:d=3"), "uniform-sphere:d=3").value, 0.0);
  EXPECT_NEAR(chi_square_divergence(AlternativeSpec::parse("vmf:d=3,kappa=0"), "uniform-sphere:d=3").value, 0.0, 1e-13);
}

TEST(ChiSquare, QuadratureOracles) {
  // mpmath quadrature / closed forms.
  struct Case {
    const char* spec;
    const char* null_id;
    double value;
    double tol;
  };
  const Case cases[] = {
      {"marron-wand:skewed-unimodal:d=1", "uniform-cube:d=1", 1.26428361375403918, 1e-9},
      {"marron-wand:asymmetric-claw:d=1", "uniform-cube:d=1", 0.651520302529858792, 1e-9},
      {"marron-wand:smooth-comb:d=1", "uniform-cube:d=1", 0.695595532933531820, 1e-9},
      {"marron-wand:skewed-unimodal:d=5", "uniform-cube:d=5", 58.5187933879638509, 1e-7},
      {"gaussian-mixture:d=1,means=0.5,scale=0.05", "uniform-cube:d=1", 4.64189583547756256, 1e-9},
      {"gaussian-mixture:d=1,means=0.3;0.7,scale=0.1", "uniform-cube:d=1", 0.440177673215489787, 1e-9},
      {"vmf:d=3,kappa=2", "uniform-sphere:d=3", 1.07462944145509619, 1e-10},
      {"vmf:d=5,kappa=3", "uniform-sphere:d=5", 1.78484399766105680, 1e-10},
      {"watson:d=3,kappa=2", "uniform-sphere:d=3", 0.471443453539368882, 1e-10},
      {"watson:d=5,kappa=1.5", "uniform-sphere:d=5", 0.155772459105331449, 1e-10},
  };
  for (const auto& c : cases) {
    const DivergenceEstimate est = chi_square_divergence(AlternativeSpec::parse(c.spec), c.null_id);
    EXPECT_NEAR(est.value, c.value, c.tol) << c.spec;
    EXPECT_LT(est.error, c.tol) << c.spec;
  }
}

TEST(ChiSquare, ContaminationScalesByWeightSquared) {
  const double full = chi_square_divergence(AlternativeSpec::parse("vmf:d=3,kappa=2"), "uniform-sphere:d=3").value;
  const double part =
      chi_square_divergence(AlternativeSpec::parse("vmf:d=3,kappa=2,weight=0.3"), "uniform-sphere:d=3").value;
  EXPECT_NEAR(part, 0.09 * full, 1e-12);
}

TEST(ChiSquare, VmfMixtureMatchesMonteCarlo) {
  const auto spec = AlternativeSpec::parse("sphere-mixture:d=3,kappa=3,k=3,seed=2");
  const double exact = chi_square_divergence(spec, "uniform-sphere:d=3").value;
  const long m = 400000;
  const Points u = uniform_points(spec.domain(), m, 12);
  Eigen::VectorXd r2(m);
  for (long i = 0; i < m; ++i) r2(i) = std::pow(4 * kPi * density(spec, u.row(i)), 2);
  EXPECT_NEAR(exact, r2.mean() - 1.0, 4.0 * se_of(r2));
}

TEST(ChiSquare, Errors) {
  EXPECT_THROW(chi_square_divergence(AlternativeSpec::parse("vmf:d=3,kappa=1"), "uniform-sphere:d=4"), ValidationError);
  EXPECT_THROW(chi_square_divergence(AlternativeSpec::parse("sphere-mixture:d=3,family=watson,kappa=1,k=2"),
                                     "uniform-sphere:d=3"),
               ValidationError);
}

// --- Specs -------------------------------------------------------------------------------

TEST(AltSpec, RoundTrip) {
  for (const char* text : {"uniform-cube:d=3", "gaussian-mixture:d=2,k=5,seed=7", "marron-wand:smooth-comb:d=5",
                           "vmf:d=4,kappa=2.5", "watson:d=3,kappa=1,mu=0;1;0", "sphere-mixture:d=3,kappa=2,k=3,seed=1",
                           "spectral:a=0.1;0.2,weight=0.25"}) {
    const auto spec = AlternativeSpec::parse(text);
    const auto again = AlternativeSpec::parse(spec.str());
    EXPECT_EQ(again.str(), spec.str()) << text;
    EXPECT_EQ(sample(again, 20, 1).points(), sample(spec, 20, 1).points()) << text;
  }
}

TEST(AltSpec, FiveGaussianDefaults) {
  const auto spec = AlternativeSpec::parse("gaussian-mixture:d=4,seed=3");
  EXPECT_EQ(spec.means.rows(), 5);
  EXPECT_EQ(spec.scale, 0.05);
  EXPECT_TRUE((spec.means.array() >= 0.2).all() && (spec.means.array() <= 0.8).all());
  for (double w : spec.component_weights) EXPECT_DOUBLE_EQ(w, 0.2);
}

TEST(AltSpec, SphereMixtureCountFollowsKappas) {
  const auto spec = AlternativeSpec::parse("sphere-mixture:d=3,kappas=2;4,seed=1");
  ASSERT_EQ(spec.components.size(), 2u);
  EXPECT_EQ(spec.components[1].kappa, 4.0);
  EXPECT_EQ(AlternativeSpec::parse("sphere-mixture:d=3,kappa=2,seed=1").components.size(), 3u);
  EXPECT_THROW(AlternativeSpec::parse("sphere-mixture:d=3,kappas=2;4,k=3,seed=1"), ValidationError);
}

TEST(AltSpec, InvalidSpecs) {
  EXPECT_THROW(AlternativeSpec::parse("vmf:d=3,kappa=-1"), ValidationError);
  EXPECT_THROW(AlternativeSpec::parse("vmf:d=3,kappa=1,mu=1;1;0"), ValidationError);
  EXPECT_THROW(AlternativeSpec::parse("gaussian-mixture:d=1,means=0.2;0.4,weights=0.5;0.6"), ValidationError);
  EXPECT_THROW(AlternativeSpec::parse("gaussian-mixture:d=1,means=0.2;0.4,weights=-0.5;1.5"), ValidationError);
  EXPECT_THROW(AlternativeSpec::parse("spectral:a=0.8"), ValidationError);  // 0.8 sqrt 2 > 1
  EXPECT_THROW(AlternativeSpec::parse("marron-wand:bimodal:d=1"), ValidationError);
  EXPECT_THROW(AlternativeSpec::parse("uniform-cube:d=2,weight=1.5"), ValidationError);
  EXPECT_THROW(AlternativeSpec::parse("uniform-cube:d=2,colour=red"), ValidationError);
  EXPECT_THROW(AlternativeSpec::parse("triangle:d=2"), ValidationError);
  EXPECT_THROW(AlternativeSpec::parse("vmf:d=3,kappa=abc"), ValidationError);
}

// --- Interpolation class -----------------------------------------------------------------

TEST(Interpolation, SingleTermLiteral) {
  Eigen::VectorXd a(1), lambda(1);
  a << 1.0;
  lambda << 0.101321;
  const auto diag = interpolation_radius(a, lambda, 1.0);
  EXPECT_NEAR(diag.trace_literal(0), 97.41, 0.01);
  EXPECT_NEAR(diag.radius(), 9.870, 1e-3);
  // Proof variant at K = 0: (a^2/lambda)^{1/theta} a^2.
  EXPECT_NEAR(diag.m_proof, std::sqrt(1.0 / 0.101321), 1e-12);
}

TEST(Interpolation, ZeroFunction) {
  const auto diag = interpolation_radius(Eigen::VectorXd::Zero(5), Eigen::VectorXd::Constant(5, 0.5), 2.0);
  EXPECT_EQ(diag.m_literal, 0.0);
  EXPECT_EQ(diag.m_proof, 0.0);
}

TEST(Interpolation, RescalingByBruteForce) {
  Eigen::VectorXd a(6), lambda(6);
  a << 0.5, -0.3, 0.2, 0.1, -0.05, 0.02;
  for (int k = 0; k < 6; ++k) lambda(k) = 1.0 / std::pow((k + 1) * kPi, 2);
  for (double theta : {0.5, 1.0, 3.0}) {
    for (double c : {0.5, 2.0}) {
      // Brute force straight from the bound.
      auto brute = [&](const Eigen::VectorXd& v) {
        double best = 0.0;
        for (int K = 1; K <= 6; ++K) {
          double head = 0.0, tail = 0.0;
          for (int k = 1; k <= K; ++k) head += v(k - 1) * v(k - 1) / lambda(k - 1);
          for (int k = K; k <= 6; ++k) tail += v(k - 1) * v(k - 1);
          best = std::max(best, std::pow(head, 2.0 / theta) * tail);
        }
        return std::sqrt(best);
      };
      const double m1 = interpolation_radius(a, lambda, theta).radius();
      const double m2 = interpolation_radius(c * a, lambda, theta).radius();
      EXPECT_NEAR(m1, brute(a), 1e-12 * m1);
      EXPECT_NEAR(m2 / m1, brute(c * a) / brute(a), 1e-12);
      EXPECT_NEAR(m2 / m1, std::pow(c, 1.0 + 2.0 / theta), 1e-12);
    }
  }
}

TEST(Interpolation, TruncationDoesNotIncreaseRadius) {
  Eigen::VectorXd a(8), lambda(8);
  for (int k = 0; k < 8; ++k) {
    a(k) = std::pow(-0.7, k);
    lambda(k) = 1.0 / std::pow(k + 1.0, 2);
  }
  for (bool proof : {false, true}) {
    double previous = interpolation_radius(a, lambda, 1.5, proof).radius();
    for (int keep = 7; keep >= 1; --keep) {
      Eigen::VectorXd t = a;
      t.tail(8 - keep).setZero();
      const double m = interpolation_radius(t, lambda, 1.5, proof).radius();
      EXPECT_LE(m, previous * (1 + 1e-12));
      previous = m;
    }
  }
}

TEST(Interpolation, Errors) {
  EXPECT_THROW(interpolation_radius(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(2), 1.0), ValidationError);
  EXPECT_THROW(interpolation_radius(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2), 0.0), ValidationError);
}

// --- Least favorable ---------------------------------------------------------------------

TEST(LeastFavorable, MultiFrequency) {
  auto basis = std::make_shared<const SpectralBasis>(cosine_reference_basis(64));
  EXPECT_EQ(least_favorable_frequencies(0.01, 1.0, 0.0, 1.0), 10);
  const auto spec = least_favorable(basis, 1000, 1.0, 0.0, 0.01, 4);
  ASSERT_EQ(spec.coefficients.size(), 10);
  EXPECT_NEAR(spec.coefficients.cwiseAbs().maxCoeff(), 0.031623, 1e-6);
  EXPECT_NEAR(spec.coefficients.cwiseAbs().minCoeff(), std::sqrt(0.001), 1e-15);
  EXPECT_NEAR(chi_square_divergence(spec, "uniform-cube:d=1").value, 0.01, 1e-15);
  // theta > 0 uses the exponent (theta + 1) / (2 s).
  EXPECT_EQ(least_favorable_frequencies(0.01, 1.0, 1.0, 1.0), 100);
}

TEST(LeastFavorable, ChiSquareEqualsDelta) {
  auto basis = std::make_shared<const SpectralBasis>(cosine_reference_basis(400));
  for (double delta : {0.003, 0.02, 0.05}) {
    for (std::uint64_t seed : {1u, 2u}) {
      const auto spec = least_favorable(basis, 500, 1.0, 0.5, delta, seed);
      EXPECT_NEAR(chi_square_divergence(spec, "uniform-cube:d=1").value, delta, 1e-14 * (1 + delta));
    }
  }
  const auto a = least_favorable(basis, 500, 1.0, 0.0, 0.02, 1);
  const auto b = least_favorable(basis, 500, 1.0, 0.0, 0.02, 2);
  EXPECT_NE(a.coefficients, b.coefficients);
}

TEST(LeastFavorable, SingleFrequency) {
  auto basis = std::make_shared<const SpectralBasis>(cosine_reference_basis(64));
  LeastFavorableOptions opt;
  opt.single_frequency = true;
  const auto spec = least_favorable(basis, 10000, 1.0, 0.0, 0.04, 0, opt);
  ASSERT_EQ(spec.coefficients.size(), 10);
  EXPECT_EQ(spec.coefficients(9), 0.2);
  EXPECT_EQ(spec.coefficients.head(9).norm(), 0.0);
  EXPECT_NEAR(chi_square_divergence(spec, "uniform-cube:d=1").value, 0.04, 1e-15);
}

TEST(LeastFavorable, PositivityViolation) {
  auto basis = std::make_shared<const SpectralBasis>(cosine_reference_basis(64));
  LeastFavorableOptions opt;
  opt.single_frequency = true;
  EXPECT_THROW(least_favorable(basis, 10000, 1.0, 0.0, 0.6, 0, opt), ValidationError);
  // C = 4 gives K = 16 equal amplitudes: sqrt(16 delta) sqrt 2 > 1.
  LeastFavorableOptions wide;
  wide.C = 4.0;
  EXPECT_THROW(least_favorable(basis, 100, 1.0, 0.0, 0.0625, 0, wide), ValidationError);
  EXPECT_THROW(least_favorable(basis, 100, 1.0, 0.0, 1e-5, 0), ValidationError);  // K > basis
}
