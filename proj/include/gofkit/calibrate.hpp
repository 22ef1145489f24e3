#pragma once

#include "gofkit/rng.hpp"
#include "gofkit/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gofkit {

enum class CalibrationMethod { chisq_mixture_mc, normal, empirical_mc, theory_loglog };

std::string to_string(CalibrationMethod method);
CalibrationMethod parse_calibration_method(const std::string& text);

/// Upper quantile z_{1-alpha} of N(0,1). Acklam's rational approximation
/// followed by one Halley step against erfc; absolute error below 1e-9.
double normal_quantile(double alpha);

/// Null-distribution threshold for one test, optionally backed by stored
/// Monte-Carlo replicates for later p-value and re-quantile queries.
class NullCalibration {
 public:
  NullCalibration(CalibrationMethod method, double alpha, double quantile, std::size_t replications = 0,
                  std::uint64_t seed = 0, std::vector<double> replicates = {});

  CalibrationMethod method() const { return method_; }
  double alpha() const { return alpha_; }
  double quantile() const { return quantile_; }
  std::size_t replications() const { return replications_; }
  std::uint64_t seed() const { return seed_; }
  /// Sorted ascending.
  const std::vector<double>& replicates() const { return replicates_; }

  /// Threshold at another level from the same replicates.
  double quantile_at(double alpha) const;

  /// Upper-tail p-value when the method admits one: (r + 1) / (R + 1) with
  /// r = #{replicates >= statistic} for Monte-Carlo methods, 1 - Phi(t) for
  /// the normal calibration. Empty for the log-log theory threshold.
  std::optional<double> p_value(double statistic) const;

  /// Bias bound sum_{k > K} lambda_k of the truncated chi-square mixture.
  double truncation_bias() const { return truncation_bias_; }
  NullCalibration& set_truncation_bias(double bias) {
    truncation_bias_ = bias;
    return *this;
  }

 private:
  CalibrationMethod method_;
  double alpha_;
  double quantile_;
  std::size_t replications_;
  std::uint64_t seed_;
  std::vector<double> replicates_;
  double truncation_bias_ = 0.0;
};

inline constexpr std::size_t kMinReplications = 100;
inline constexpr std::size_t kDefaultEmpiricalReps = 200;
inline constexpr std::size_t kDefaultChisqReps = 100'000;

/// Upper-alpha Monte-Carlo threshold from sorted replicates: the order
/// statistic of rank R + 1 - floor(alpha (R + 1)), so that
/// statistic > threshold exactly when the add-one p-value is <= alpha.
/// Returns +inf when alpha (R + 1) < 1.
double mc_upper_quantile(const std::vector<double>& sorted, double alpha);

/// (1-alpha) quantile of W = sum_k lambda_k Z_k^2 from `reps` draws.
/// Replicate r uses the stream derive_seed(seed, {r}).
NullCalibration chisq_mix_quantile(const Eigen::VectorXd& eigenvalues, double alpha,
                                   std::size_t reps = kDefaultChisqReps, std::uint64_t seed = 0, int workers = 1,
                                   double truncation_bias = 0.0);

NullCalibration normal_calibration(double alpha);

/// sqrt(3 log log n): the fixed threshold of the adaptive test.
double loglog_threshold(long n);
NullCalibration theory_calibration(double alpha, long n);

using StatisticFn = std::function<double(const Sample&)>;
using NullSampler = std::function<Sample(long n, Rng& rng)>;

/// Sample (1-alpha) quantile of `statistic` over `reps` independent null
/// samples of size n. Replicate r draws from derive_seed(seed, {r}); the
/// result does not depend on `workers`.
NullCalibration empirical_null_quantile(const StatisticFn& statistic, const NullSampler& sampler, const Domain& domain,
                                        long n, double alpha, std::size_t reps = kDefaultEmpiricalReps,
                                        std::uint64_t seed = 0, int workers = 1);

}  // namespace gofkit
