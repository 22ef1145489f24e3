#include "gofkit/embedding.hpp"

#include "gofkit/error.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace gofkit {

namespace {

void check_moments(const SpectralBasis& basis, const SampleMoments& m) {
  require(m.n >= 1, "sample must contain at least one point");
  require(m.mean_sq.size() == basis.blocks() && m.diag.size() == basis.blocks(),
          "sample moments do not match the basis");
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace

double mmd_vstat(const SpectralBasis& basis, const Sample& sample) {
  return mmd_vstat(basis, basis.moments(sample));
}

double mmd_vstat(const SpectralBasis& basis, const SampleMoments& moments) {
  require(basis.degenerate(), "mmd_vstat needs a degenerate (centered) basis");
  check_moments(basis, moments);
  return basis.eigenvalues().dot(moments.mean_sq);
}

double eta_sq(const ModeratedSpectrum& ms, const Sample& sample) {
  return eta_sq(ms, ms.basis().moments(sample));
}

double eta_sq(const ModeratedSpectrum& ms, const SampleMoments& moments) {
  check_moments(ms.basis(), moments);
  return ms.moderated_eigenvalues().dot(moments.mean_sq);
}

double eta_sq_gram(const ModeratedSpectrum& ms, const Sample& sample) {
  const Eigen::Index n = sample.size();
  require(n <= kGramSizeLimit, "eta_sq_gram: sample size " + std::to_string(n) + " exceeds the Gram limit " +
                                   std::to_string(kGramSizeLimit));
  require(sample.dim() == ms.basis().domain().dim, "sample dimension does not match the basis");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    sum += moderated_eval(ms, sample.point(i), sample.point(i));
    for (Eigen::Index j = i + 1; j < n; ++j) sum += 2.0 * moderated_eval(ms, sample.point(i), sample.point(j));
  }
  const auto nn = static_cast<double>(n);
  return sum / (nn * nn);
}

double diag_term(const ModeratedSpectrum& ms, const Sample& sample) {
  return diag_term(ms, ms.basis().moments(sample));
}

double diag_term(const ModeratedSpectrum& ms, const SampleMoments& moments) {
  check_moments(ms.basis(), moments);
  return ms.moderated_eigenvalues().dot(moments.diag);
}

double studentized_stat(const ModeratedSpectrum& ms, const Sample& sample) {
  return studentized_stat(ms, ms.basis().moments(sample));
}

double studentized_stat(const ModeratedSpectrum& ms, const SampleMoments& moments) {
  check_moments(ms.basis(), moments);
  return studentized_stat(ms.moderated_eigenvalues(), ms.basis().multiplicities(), moments);
}

double studentized_stat(const Eigen::VectorXd& moderated, const Eigen::VectorXd& multiplicities,
                        const SampleMoments& moments) {
  const double v = (multiplicities.array() * moderated.array().square()).sum();
  require(v > 0.0, "studentized_stat: effective variance is zero");
  // Blockwise n * mean_sq - diag keeps the n = 1 cancellation exact.
  const auto n = static_cast<double>(moments.n);
  const double centered = moderated.dot(n * moments.mean_sq - moments.diag);
  return centered / std::sqrt(2.0 * v);
}

double rho_schedule(long n, double s, double theta, double c) {
  require(n >= 2, "rho_schedule: n must be >= 2");
  require(s > 0.5, "rho_schedule: s must exceed 1/2");
  require(theta >= 0.0, "rho_schedule: theta must be >= 0");
  require(c > 0.0, "rho_schedule: c must be positive");
  const double exponent = -2.0 * s * (theta + 1.0) / (4.0 * s + theta + 1.0);
  return c * std::pow(static_cast<double>(n), exponent);
}

RhoGrid adaptive_grid(long n, double s) {
  require(n >= 16, "adaptive_grid: n must be >= 16");
  require(s > 0.5, "adaptive_grid: s must exceed 1/2");
  const double log2_L = std::log2(std::sqrt(std::log(std::log(static_cast<double>(n)))) / static_cast<double>(n));
  RhoGrid grid;
  grid.rho_star = std::exp2(2.0 * s * log2_L);
  grid.m_star = static_cast<int>(std::ceil((2.0 * s / (4.0 * s + 1.0) - 2.0 * s) * log2_L));
  grid.values.reserve(grid.m_star + 1);
  for (int k = 0; k <= grid.m_star; ++k) grid.values.push_back(std::ldexp(grid.rho_star, k));
  return grid;
}

RhoGrid custom_grid(std::vector<double> values) {
  require(!values.empty(), "rho grid must be nonempty");
  for (double v : values) require(v > 0.0 && std::isfinite(v), "rho grid values must be positive");
  RhoGrid grid;
  grid.rho_star = values.front();
  grid.m_star = static_cast<int>(values.size()) - 1;
  grid.values = std::move(values);
  return grid;
}

AdaptiveResult adaptive_stat(const SpectralBasis& basis, const RhoGrid& grid, const Sample& sample) {
  return adaptive_stat(basis, grid, basis.moments(sample));
}

AdaptiveResult adaptive_stat(const SpectralBasis& basis, const RhoGrid& grid, const SampleMoments& moments) {
  require(!grid.values.empty(), "adaptive_stat: empty grid");
  check_moments(basis, moments);
  AdaptiveResult result;
  result.per_rho.resize(static_cast<Eigen::Index>(grid.values.size()));
  const Eigen::ArrayXd lambda = basis.eigenvalues().array();
  for (std::size_t g = 0; g < grid.values.size(); ++g) {
    const Eigen::VectorXd moderated = moderate(lambda, grid.values[g]).matrix();
    const double t = studentized_stat(moderated, basis.multiplicities(), moments);
    result.per_rho(static_cast<Eigen::Index>(g)) = t;
    if (g == 0 || t > result.statistic) {
      result.statistic = t;
      result.argmax_rho = grid.values[g];
    }
  }
  return result;
}

std::string to_string(TestKind kind) {
  switch (kind) {
    case TestKind::mmd: return "mmd";
    case TestKind::m3d: return "m3d";
    case TestKind::adaptive: return "adaptive";
  }
  return "unknown";
}

TestKind parse_test_kind(const std::string& text) {
  if (text == "mmd") return TestKind::mmd;
  if (text == "m3d") return TestKind::m3d;
  if (text == "adaptive") return TestKind::adaptive;
  throw ValidationError("unknown test kind '" + text + "' (expected mmd, m3d or adaptive)");
}

namespace {

double m3d_rho(const SpectralBasis& basis, long n, const TestParameters& params) {
  if (params.rho) {
    require(*params.rho > 0.0, "rho must be positive");
    return *params.rho;
  }
  return rho_schedule(n, basis.decay_exponent(), params.theta, params.schedule_c);
}

RhoGrid resolve_grid(const SpectralBasis& basis, long n, const TestParameters& params) {
  return params.grid ? *params.grid : adaptive_grid(n, basis.decay_exponent());
}

}  // namespace

double test_statistic(TestKind kind, const SpectralBasis& basis, const SampleMoments& moments,
                      const TestParameters& params) {
  switch (kind) {
    case TestKind::mmd: return static_cast<double>(moments.n) * mmd_vstat(basis, moments);
    case TestKind::m3d: {
      const double rho = m3d_rho(basis, static_cast<long>(moments.n), params);
      check_moments(basis, moments);
      const Eigen::VectorXd moderated = moderate(basis.eigenvalues().array(), rho).matrix();
      return studentized_stat(moderated, basis.multiplicities(), moments);
    }
    case TestKind::adaptive:
      return adaptive_stat(basis, resolve_grid(basis, static_cast<long>(moments.n), params), moments).statistic;
  }
  return 0.0;
}

TestReport run_test(TestKind kind, const SpectralBasis& basis, const Sample& sample, double alpha,
                    const std::optional<NullCalibration>& calibration, const TestParameters& params) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(calibration.has_value(), "run_test: missing calibration for " + to_string(kind));
  require(sample.dim() == basis.domain().dim, "run_test: sample dimension " + std::to_string(sample.dim()) +
                                                  " does not match basis domain " + basis.null_id());
  basis.domain().check_points(sample.points(), "run_test");

  const CalibrationMethod method = calibration->method();
  switch (kind) {
    case TestKind::mmd:
      require(method == CalibrationMethod::chisq_mixture_mc || method == CalibrationMethod::empirical_mc,
              "mmd needs a chi-square-mixture or empirical calibration");
      break;
    case TestKind::m3d:
      require(method == CalibrationMethod::normal || method == CalibrationMethod::empirical_mc,
              "m3d needs a normal or empirical calibration");
      break;
    case TestKind::adaptive:
      require(method == CalibrationMethod::theory_loglog || method == CalibrationMethod::empirical_mc,
              "adaptive needs a theory or empirical calibration");
      break;
  }

  const SampleMoments moments = basis.moments(sample);
  const long n = static_cast<long>(sample.size());

  TestReport report;
  report.kind = kind;
  report.alpha = alpha;
  report.n = n;
  report.truncation = basis.truncation();
  report.calibration = method;
  report.replications = calibration->replications();
  report.seed = calibration->seed();

  switch (kind) {
    case TestKind::mmd: report.statistic = static_cast<double>(n) * mmd_vstat(basis, moments); break;
    case TestKind::m3d: {
      const double rho = m3d_rho(basis, n, params);
      report.rho = rho;
      const Eigen::VectorXd moderated = moderate(basis.eigenvalues().array(), rho).matrix();
      report.statistic = studentized_stat(moderated, basis.multiplicities(), moments);
      break;
    }
    case TestKind::adaptive: {
      RhoGrid grid = resolve_grid(basis, n, params);
      const AdaptiveResult result = adaptive_stat(basis, grid, moments);
      report.statistic = result.statistic;
      report.argmax_rho = result.argmax_rho;
      report.grid = std::move(grid);
      if (n >= 16) report.theory_threshold = loglog_threshold(n);
      break;
    }
  }

  report.threshold = alpha == calibration->alpha() ? calibration->quantile() : calibration->quantile_at(alpha);
  report.reject = report.statistic > report.threshold;
  report.p_value = calibration->p_value(report.statistic);
  return report;
}

std::string TestReport::to_text() const {
  std::ostringstream out;
  out << "test: " << to_string(kind) << '\n'
      << "statistic: " << fmt(statistic) << '\n'
      << "threshold: " << fmt(threshold) << '\n'
      << "p_value: " << (p_value ? fmt(*p_value) : "NA") << '\n'
      << "reject: " << (reject ? "true" : "false") << '\n'
      << "alpha: " << fmt(alpha) << '\n'
      << "n: " << n << '\n'
      << "truncation: " << truncation << '\n'
      << "calibration: " << to_string(calibration) << '\n'
      << "replications: " << replications << '\n'
      << "seed: " << seed << '\n';
  if (rho) out << "rho: " << fmt(*rho) << '\n';
  if (grid) {
    out << "rho_star: " << fmt(grid->rho_star) << '\n'
        << "m_star: " << grid->m_star << '\n'
        << "grid_size: " << grid->values.size() << '\n';
  }
  if (argmax_rho) out << "argmax_rho: " << fmt(*argmax_rho) << '\n';
  if (theory_threshold) out << "theory_threshold: " << fmt(*theory_threshold) << '\n';
  return out.str();
}

std::string TestReport::to_json() const {
  std::ostringstream out;
  out << "{\"test\":\"" << to_string(kind) << "\",\"statistic\":" << fmt(statistic)
      << ",\"threshold\":" << (std::isfinite(threshold) ? fmt(threshold) : "null")
      << ",\"p_value\":" << (p_value ? fmt(*p_value) : "null") << ",\"reject\":" << (reject ? "true" : "false")
      << ",\"alpha\":" << fmt(alpha) << ",\"n\":" << n << ",\"truncation\":" << truncation
      << ",\"calibration\":\"" << to_string(calibration) << "\",\"replications\":" << replications
      << ",\"seed\":" << seed;
  if (rho) out << ",\"rho\":" << fmt(*rho);
  if (grid) out << ",\"rho_star\":" << fmt(grid->rho_star) << ",\"m_star\":" << grid->m_star;
  if (argmax_rho) out << ",\"argmax_rho\":" << fmt(*argmax_rho);
  if (theory_threshold) out << ",\"theory_threshold\":" << fmt(*theory_threshold);
  out << '}';
  return out.str();
}

}  // namespace gofkit
