#include "gofkit/calibrate.hpp"

#include "gofkit/error.hpp"
#include "gofkit/parallel.hpp"
#include "gofkit/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace gofkit {

std::string to_string(CalibrationMethod method) {
  switch (method) {
    case CalibrationMethod::chisq_mixture_mc: return "chisq-mixture-mc";
    case CalibrationMethod::normal: return "normal";
    case CalibrationMethod::empirical_mc: return "empirical-mc";
    case CalibrationMethod::theory_loglog: return "theory-loglog";
  }
  return "unknown";
}

CalibrationMethod parse_calibration_method(const std::string& text) {
  for (auto m : {CalibrationMethod::chisq_mixture_mc, CalibrationMethod::normal, CalibrationMethod::empirical_mc,
                 CalibrationMethod::theory_loglog}) {
    if (text == to_string(m)) return m;
  }
  throw ValidationError("unknown calibration method '" + text + "'");
}

namespace {

// Acklam's approximation to the lower quantile Phi^{-1}(p).
double acklam(double p) {
  constexpr std::array a{-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                         1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  constexpr std::array b{-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                         6.680131188771972e+01,  -1.328068155288572e+01};
  constexpr std::array c{-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                         -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  constexpr std::array d{7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                         3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) return -acklam(1.0 - p);
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

void check_alpha(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
}

}  // namespace

double normal_quantile(double alpha) {
  check_alpha(alpha);
  if (alpha == 0.5) return 0.0;
  // z_{1-alpha} = -Phi^{-1}(alpha); refine against the tail probability alpha
  // directly so no precision is lost to 1 - alpha.
  double x = acklam(alpha);
  const double e = special::normal_cdf(x) - alpha;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return -x;
}

NullCalibration::NullCalibration(CalibrationMethod method, double alpha, double quantile, std::size_t replications,
                                 std::uint64_t seed, std::vector<double> replicates)
    : method_(method),
      alpha_(alpha),
      quantile_(quantile),
      replications_(replications),
      seed_(seed),
      replicates_(std::move(replicates)) {
  check_alpha(alpha);
  std::sort(replicates_.begin(), replicates_.end());
  const bool mc = method == CalibrationMethod::chisq_mixture_mc || method == CalibrationMethod::empirical_mc;
  if (mc) {
    require(replications_ >= kMinReplications, "Monte-Carlo calibration needs at least 100 replications");
  }
}

double NullCalibration::quantile_at(double alpha) const {
  check_alpha(alpha);
  switch (method_) {
    case CalibrationMethod::normal: return normal_quantile(alpha);
    case CalibrationMethod::theory_loglog: return quantile_;
    default: break;
  }
  require(!replicates_.empty(), "calibration carries no replicates");
  return mc_upper_quantile(replicates_, alpha);
}

std::optional<double> NullCalibration::p_value(double statistic) const {
  switch (method_) {
    case CalibrationMethod::normal: return special::normal_upper_tail(statistic);
    case CalibrationMethod::theory_loglog: return std::nullopt;
    default: break;
  }
  if (replicates_.empty()) return std::nullopt;
  const auto first = std::lower_bound(replicates_.begin(), replicates_.end(), statistic);
  const auto r = static_cast<double>(replicates_.end() - first);
  return (r + 1.0) / (static_cast<double>(replicates_.size()) + 1.0);
}

double mc_upper_quantile(const std::vector<double>& sorted, double alpha) {
  check_alpha(alpha);
  require(!sorted.empty(), "no replicates");
  const auto R = static_cast<double>(sorted.size());
  const double j = std::floor(alpha * (R + 1.0));
  if (j < 1.0) return std::numeric_limits<double>::infinity();
  // 1-based rank R + 1 - j.
  const auto rank = static_cast<std::size_t>(R + 1.0 - j);
  return sorted[rank - 1];
}

NullCalibration chisq_mix_quantile(const Eigen::VectorXd& eigenvalues, double alpha, std::size_t reps,
                                   std::uint64_t seed, int workers, double truncation_bias) {
  check_alpha(alpha);
  require(reps >= kMinReplications, "chisq_mix_quantile: reps must be >= 100");
  require(eigenvalues.size() >= 1, "chisq_mix_quantile: empty spectrum");
  require((eigenvalues.array() > 0.0).all(), "chisq_mix_quantile: eigenvalues must be positive");
  std::vector<double> draws(reps);
  parallel_for(reps, workers, [&](std::size_t r) {
    Rng rng = make_rng(seed, {r});
    std::normal_distribution<double> z;
    double w = 0.0;
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
      const double zk = z(rng);
      w += eigenvalues(k) * zk * zk;
    }
    draws[r] = w;
  });
  std::sort(draws.begin(), draws.end());
  const double q = mc_upper_quantile(draws, alpha);
  NullCalibration cal(CalibrationMethod::chisq_mixture_mc, alpha, q, reps, seed, std::move(draws));
  cal.set_truncation_bias(truncation_bias);
  return cal;
}

NullCalibration normal_calibration(double alpha) {
  return NullCalibration(CalibrationMethod::normal, alpha, normal_quantile(alpha));
}

double loglog_threshold(long n) {
  require(n >= 16, "log log threshold needs n >= 16");
  return std::sqrt(3.0 * std::log(std::log(static_cast<double>(n))));
}

NullCalibration theory_calibration(double alpha, long n) {
  return NullCalibration(CalibrationMethod::theory_loglog, alpha, loglog_threshold(n));
}

NullCalibration empirical_null_quantile(const StatisticFn& statistic, const NullSampler& sampler, const Domain& domain,
                                        long n, double alpha, std::size_t reps, std::uint64_t seed, int workers) {
  check_alpha(alpha);
  require(reps >= kMinReplications, "empirical_null_quantile: reps must be >= 100");
  require(n >= 1, "empirical_null_quantile: n must be >= 1");
  std::vector<double> values(reps);
  parallel_for(reps, workers, [&](std::size_t r) {
    Rng rng = make_rng(seed, {r});
    Sample sample = sampler(n, rng);
    require(sample.size() == n, "null sampler returned the wrong sample size");
    domain.check_points(sample.points(), "null sampler");
    values[r] = statistic(sample);
  });
  std::sort(values.begin(), values.end());
  const double q = mc_upper_quantile(values, alpha);
  return NullCalibration(CalibrationMethod::empirical_mc, alpha, q, reps, seed, std::move(values));
}

}  // namespace gofkit
