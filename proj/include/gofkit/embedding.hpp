#pragma once

#include "gofkit/calibrate.hpp"
#include "gofkit/spectrum.hpp"
#include "gofkit/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gofkit {

/// gamma^2(P_n, P0) = sum_k lambda_k [n^-1 sum_i phi_k(X_i)]^2 for a
/// degenerate basis.
double mmd_vstat(const SpectralBasis& basis, const Sample& sample);
double mmd_vstat(const SpectralBasis& basis, const SampleMoments& moments);

/// eta^2_rho(P_n, P0) = sum_k lambda~_k [n^-1 sum_i phi_k(X_i)]^2.
double eta_sq(const ModeratedSpectrum& ms, const Sample& sample);
double eta_sq(const ModeratedSpectrum& ms, const SampleMoments& moments);

/// Largest sample accepted by eta_sq_gram (n^2 kernel evaluations).
inline constexpr Eigen::Index kGramSizeLimit = 4096;

/// n^-2 sum_{i,j} K~_rho(X_i, X_j), evaluated pairwise through moderated_eval.
double eta_sq_gram(const ModeratedSpectrum& ms, const Sample& sample);

/// A_n = n^-1 sum_i K~_rho(X_i, X_i).
double diag_term(const ModeratedSpectrum& ms, const Sample& sample);
double diag_term(const ModeratedSpectrum& ms, const SampleMoments& moments);

/// (2 v)^{-1/2} (n eta^2 - A_n), v from effective_variance.
double studentized_stat(const ModeratedSpectrum& ms, const Sample& sample);
double studentized_stat(const ModeratedSpectrum& ms, const SampleMoments& moments);

/// Studentized statistic straight from moderated eigenvalues; shared by the
/// fixed-rho and adaptive paths.
double studentized_stat(const Eigen::VectorXd& moderated, const Eigen::VectorXd& multiplicities,
                        const SampleMoments& moments);

/// c n^{-2s(theta+1)/(4s+theta+1)}.
double rho_schedule(long n, double s, double theta = 0.0, double c = 1.0);

/// Dyadic grid rho_*, 2 rho_*, ..., 2^{m_*} rho_*.
struct RhoGrid {
  double rho_star = 0.0;
  int m_star = 0;
  std::vector<double> values;
};

/// rho_* = (sqrt(log log n)/n)^{2s},
/// m_* = ceil(log2[rho_*^{-1} (sqrt(log log n)/n)^{2s/(4s+1)}]).
RhoGrid adaptive_grid(long n, double s);

/// Grid from explicit values (diagnostics and tests); must be nonempty.
RhoGrid custom_grid(std::vector<double> values);

struct AdaptiveResult {
  double statistic = 0.0;
  double argmax_rho = 0.0;
  Eigen::VectorXd per_rho;  // studentized statistic at each grid value
};

/// sup over the grid of the studentized statistic.
AdaptiveResult adaptive_stat(const SpectralBasis& basis, const RhoGrid& grid, const Sample& sample);
AdaptiveResult adaptive_stat(const SpectralBasis& basis, const RhoGrid& grid, const SampleMoments& moments);

enum class TestKind { mmd, m3d, adaptive };
std::string to_string(TestKind kind);
TestKind parse_test_kind(const std::string& text);

struct TestParameters {
  std::optional<double> rho;     // m3d: explicit rho; otherwise rho_schedule
  double theta = 0.0;            // m3d: schedule theta
  double schedule_c = 1.0;       // m3d: schedule constant
  std::optional<RhoGrid> grid;   // adaptive: otherwise adaptive_grid(n, s)
};

struct TestReport {
  TestKind kind = TestKind::mmd;
  double statistic = 0.0;
  double threshold = 0.0;
  std::optional<double> p_value;
  bool reject = false;
  double alpha = 0.05;
  long n = 0;
  Eigen::Index truncation = 0;

  CalibrationMethod calibration = CalibrationMethod::normal;
  std::size_t replications = 0;
  std::uint64_t seed = 0;

  std::optional<double> rho;          // m3d
  std::optional<RhoGrid> grid;        // adaptive
  std::optional<double> argmax_rho;   // adaptive
  std::optional<double> theory_threshold;  // adaptive: sqrt(3 log log n), always reported

  /// `key: value` lines.
  std::string to_text() const;
  /// Single-line JSON record.
  std::string to_json() const;
};

/// Runs one test. The statistic is n gamma^2 for mmd, the studentized
/// statistic for m3d and its grid maximum for adaptive; reject iff
/// statistic > threshold.
TestReport run_test(TestKind kind, const SpectralBasis& basis, const Sample& sample, double alpha,
                    const std::optional<NullCalibration>& calibration, const TestParameters& params = {});

/// The statistic run_test would report, without calibration. Used as the
/// statistic procedure for empirical calibration.
double test_statistic(TestKind kind, const SpectralBasis& basis, const SampleMoments& moments,
                      const TestParameters& params);

}  // namespace gofkit
