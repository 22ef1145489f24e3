#include "gofkit/calibrate.hpp"
#include "gofkit/embedding.hpp"
#include "gofkit/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace gofkit;

namespace {

Sample uniform_sample(long n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Points x(n, 1);
  for (long i = 0; i < n; ++i) x(i, 0) = u(rng);
  return Sample(std::move(x));
}

double sd(const std::vector<double>& v) {
  double m = 0.0, s = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST(ChisqMix, SingleUnitEigenvalue) {
  const NullCalibration cal = chisq_mix_quantile(Eigen::VectorXd::Ones(1), 0.05, 1'000'000, 1);
  EXPECT_NEAR(cal.quantile(), 3.841458820694124, 0.02);
  EXPECT_EQ(cal.method(), CalibrationMethod::chisq_mixture_mc);
  EXPECT_EQ(cal.replications(), 1'000'000u);
}

TEST(ChisqMix, TwoHalfEigenvalues) {
  const NullCalibration cal = chisq_mix_quantile(Eigen::VectorXd::Constant(2, 0.5), 0.05, 1'000'000, 2);
  // 0.5 * chi-square(2) is Exp(1): quantile log 20.
  EXPECT_NEAR(cal.quantile(), 2.995732273553991, 0.02);
}

TEST(ChisqMix, WithinThreeStandardErrors) {
  const NullCalibration cal = chisq_mix_quantile(Eigen::VectorXd::Ones(1), 0.05, 100'000, 3);
  // SE = sqrt(alpha (1 - alpha) / R) / f(q), f the chi-square(1) density at q.
  const double q = 3.841458820694124;
  const double f = std::exp(-q / 2.0) / std::sqrt(2.0 * M_PI * q);
  EXPECT_NEAR(cal.quantile(), q, 3.0 * std::sqrt(0.05 * 0.95 / 1e5) / f);
}

TEST(ChisqMix, QuantileMonotoneInLevel) {
  Eigen::VectorXd lambda(5);
  lambda << 0.4, 0.2, 0.1, 0.05, 0.01;
  const NullCalibration cal = chisq_mix_quantile(lambda, 0.05, 5000, 4);
  EXPECT_GT(cal.quantile_at(0.001), cal.quantile_at(0.5));
  double previous = -INFINITY;
  for (double a : {0.9, 0.5, 0.2, 0.1, 0.05, 0.01, 0.001}) {
    EXPECT_GE(cal.quantile_at(a), previous);
    previous = cal.quantile_at(a);
  }
}

TEST(ChisqMix, WorkerCountDoesNotChangeResult) {
  Eigen::VectorXd lambda(3);
  lambda << 1.0, 0.5, 0.25;
  const NullCalibration a = chisq_mix_quantile(lambda, 0.05, 3000, 9, 1);
  const NullCalibration b = chisq_mix_quantile(lambda, 0.05, 3000, 9, 4);
  EXPECT_EQ(a.replicates(), b.replicates());
  EXPECT_EQ(a.quantile(), b.quantile());
}

TEST(ChisqMix, Errors) {
  EXPECT_THROW(chisq_mix_quantile(Eigen::VectorXd::Ones(1), 0.05, 99, 1), ValidationError);
  EXPECT_THROW(chisq_mix_quantile(-Eigen::VectorXd::Ones(1), 0.05, 100, 1), ValidationError);
  EXPECT_THROW(chisq_mix_quantile(Eigen::VectorXd::Ones(1), 1.0, 100, 1), ValidationError);
}

TEST(ChisqMix, StandardErrorShrinksWithReps) {
  std::vector<double> small, large;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    small.push_back(chisq_mix_quantile(Eigen::VectorXd::Ones(1), 0.05, 400, 1000 + seed).quantile());
    large.push_back(chisq_mix_quantile(Eigen::VectorXd::Ones(1), 0.05, 800, 5000 + seed).quantile());
  }
  EXPECT_NEAR(sd(large) / sd(small), 1.0 / std::sqrt(2.0), 0.3 / std::sqrt(2.0));
}

TEST(McQuantile, PValueAgreesWithThreshold) {
  std::vector<double> reps;
  for (int i = 0; i < 199; ++i) reps.push_back(i % 50);  // heavy ties
  const NullCalibration cal(CalibrationMethod::empirical_mc, 0.05, mc_upper_quantile(reps, 0.05), 199, 0, reps);
  for (double t = -1.0; t <= 51.0; t += 0.5) {
    for (double a : {0.01, 0.05, 0.1, 0.3}) {
      EXPECT_EQ(t > cal.quantile_at(a), *cal.p_value(t) <= a) << "t=" << t << " a=" << a;
    }
  }
  // alpha (R + 1) < 1: no replicate can be exceeded.
  EXPECT_TRUE(std::isinf(mc_upper_quantile(reps, 0.001)));
}

TEST(EmpiricalNull, ConstantStatistic) {
  const NullSampler sampler = [](long n, Rng& rng) { return uniform_sample(n, rng); };
  const NullCalibration cal =
      empirical_null_quantile([](const Sample&) { return 0.0; }, sampler, Domain{}, 10, 0.05, 200, 1);
  EXPECT_EQ(cal.quantile(), 0.0);
  EXPECT_EQ(cal.quantile_at(0.5), 0.0);
  EXPECT_EQ(cal.replicates().size(), 200u);
}

TEST(EmpiricalNull, DeterministicGivenSeed) {
  const SpectralBasis basis = cosine_reference_basis(64);
  const StatisticFn stat = [&](const Sample& s) { return test_statistic(TestKind::m3d, basis, basis.moments(s), {}); };
  const NullSampler sampler = [](long n, Rng& rng) { return uniform_sample(n, rng); };
  const NullCalibration a = empirical_null_quantile(stat, sampler, Domain{}, 100, 0.05, 150, 42, 1);
  const NullCalibration b = empirical_null_quantile(stat, sampler, Domain{}, 100, 0.05, 150, 42, 3);
  EXPECT_EQ(a.quantile(), b.quantile());
  EXPECT_EQ(a.replicates(), b.replicates());
  const NullCalibration c = empirical_null_quantile(stat, sampler, Domain{}, 100, 0.05, 150, 43, 1);
  EXPECT_NE(a.quantile(), c.quantile());
}

TEST(EmpiricalNull, SamplerDomainMismatch) {
  const NullSampler wrong = [](long n, Rng&) { return Sample(Points::Constant(n, 2, 0.5)); };
  EXPECT_THROW(empirical_null_quantile([](const Sample&) { return 0.0; }, wrong, Domain{}, 5, 0.05, 100, 1),
               ValidationError);
  const NullSampler outside = [](long n, Rng&) { return Sample(Points::Constant(n, 1, 1.5)); };
  EXPECT_THROW(empirical_null_quantile([](const Sample&) { return 0.0; }, outside, Domain{}, 5, 0.05, 100, 1),
               ValidationError);
  EXPECT_THROW(empirical_null_quantile([](const Sample&) { return 0.0; }, wrong, Domain{}, 5, 0.05, 99, 1),
               ValidationError);
}

TEST(EmpiricalNull, AdaptiveSelfConsistentLevel) {
  const SpectralBasis basis = cosine_reference_basis(256);
  const StatisticFn stat = [&](const Sample& s) {
    return test_statistic(TestKind::adaptive, basis, basis.moments(s), {});
  };
  const NullSampler sampler = [](long n, Rng& rng) { return uniform_sample(n, rng); };
  const NullCalibration cal = empirical_null_quantile(stat, sampler, Domain{}, 500, 0.05, 200, 2020);
  int rejections = 0;
  for (int r = 0; r < 500; ++r) {
    Rng rng = make_rng(31337, {static_cast<std::uint64_t>(r)});
    rejections += run_test(TestKind::adaptive, basis, uniform_sample(500, rng), 0.05, cal).reject;
  }
  EXPECT_NEAR(rejections / 500.0, 0.05, 0.03);
}

TEST(TheoryCalibration, LogLog) {
  EXPECT_NEAR(loglog_threshold(1000), 2.4079, 1e-4);
  EXPECT_FALSE(theory_calibration(0.05, 1000).p_value(3.0));
  EXPECT_THROW(loglog_threshold(10), ValidationError);
}

TEST(NormalCalibration, PValue) {
  const NullCalibration cal = normal_calibration(0.05);
  EXPECT_NEAR(cal.quantile(), 1.6448536269514722, 1e-9);
  EXPECT_NEAR(*cal.p_value(1.6448536269514722), 0.05, 1e-12);
}
