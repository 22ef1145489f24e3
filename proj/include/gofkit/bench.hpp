#pragma once

#include "gofkit/calibrate.hpp"
#include "gofkit/dists.hpp"
#include "gofkit/embedding.hpp"
#include "gofkit/kernels.hpp"
#include "gofkit/spectrum.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gofkit {

/// One test column of an experiment.
struct TestConfig {
  TestKind kind = TestKind::mmd;
  /// Defaults per kind: mmd chisq-mixture-mc, m3d normal, adaptive empirical-mc.
  std::optional<CalibrationMethod> calibration;
  std::size_t calibration_reps = 0;  // 0: kDefaultChisqReps / kDefaultEmpiricalReps
  TestParameters params;
  std::optional<double> s;  // decay exponent override for schedules and grids
  /// m3d only: choose rho per (alternative, n) from the adaptive grid as the
  /// value with the highest rejection rate. An oracle procedure, labelled
  /// `m3d-oracle` in the output.
  bool oracle_rho = false;

  std::string label() const;
  CalibrationMethod method() const;
};

/// Full-factorial power experiment. JSON schema (keys optional unless noted):
///
///     { "null": "uniform-cube:d=5",                      required
///       "kernel": "cosine", "trunc": 256, "nodes": 0, "factor_trunc": 0,
///       "alternatives": ["marron-wand:skewed-unimodal:d=5"],   required
///       "tests": [ {"kind": "mmd"},
///                  {"kind": "adaptive", "calibration": "empirical-mc",
///                   "calibration_reps": 200, "s": 1},
///                  {"kind": "m3d", "rho": 0.05, "theta": 0, "c": 1,
///                   "oracle_rho": false} ],                  required
///       "n": [200, 400], "reps": 100, "alpha": 0.05,
///       "seed": 1, "workers": 1, "output": "out" }
struct ExperimentPlan {
  std::string null_id = "uniform-cube:d=1";
  DecomposeRequest spectrum{"cosine", "uniform-cube:d=1"};
  std::vector<std::string> alternatives;
  std::vector<TestConfig> tests;
  std::vector<long> n;
  std::size_t reps = 100;
  double alpha = 0.05;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string output = "out";

  void validate() const;
  /// Unknown keys are rejected so that typos do not silently fall back to defaults.
  static ExperimentPlan from_json(const std::string& text);
  std::string to_json() const;
};

/// Desk-scale error-versus-n experiment: uniform [0,1]^5 against
/// the five-Gaussian mixture and two product Marron-Wand alternatives,
/// n = 200..1000, 100 reps, MMD against the adaptive moderated test.
ExperimentPlan desk_fig1_plan(std::uint64_t seed);

struct PowerRow {
  std::string test;
  long n = 0;
  int dim = 0;
  std::string alternative;
  std::size_t replicate = 0;
  bool reject = false;
  double statistic = 0.0;
  double threshold = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const PowerRow&, const PowerRow&) = default;
};

struct PowerTable {
  std::vector<PowerRow> rows;
  friend bool operator==(const PowerTable&, const PowerTable&) = default;
};

/// Seed of one replicate: a pure function of (master, alternative, test, n, replicate).
std::uint64_t replicate_seed(std::uint64_t master, const std::string& alternative, const std::string& test, long n,
                             std::size_t replicate);

/// Rows ordered (alternative, test, n, replicate) in plan order.
PowerTable run_plan(const ExperimentPlan& plan, const SpectralBasis& basis);
/// Builds the basis from plan.spectrum first.
PowerTable run_plan(const ExperimentPlan& plan);

struct CellSummary {
  std::string test;
  std::string alternative;
  long n = 0;
  int dim = 0;
  std::size_t reps = 0;
  std::size_t rejections = 0;
  double reject_rate = 0.0;
  double accept_rate = 0.0;  // the plotted error: P(accept H0)
  double std_error = 0.0;    // sqrt(p (1 - p) / reps)
};

/// One summary per (test, alternative, n), sorted by that key. Order of the
/// input rows does not matter.
std::vector<CellSummary> aggregate(const PowerTable& table);

/// Concatenates partial tables and sorts rows by (alternative, test, n, replicate).
PowerTable merge(const std::vector<PowerTable>& parts);

inline constexpr const char* kPowerCsvHeader = "test,n,dim,alternative,replicate,reject,statistic,threshold,seed";

std::string to_csv(const PowerTable& table);
PowerTable parse_csv(const std::string& text);
std::string summary_csv(const std::vector<CellSummary>& cells);

/// Writes power.csv, summary.csv and plot_power.py (matplotlib, one panel per
/// alternative, error against n per test) into `dir`. Returns the CSV path.
std::filesystem::path emit(const PowerTable& table, const std::filesystem::path& dir);

struct BoundaryProbeConfig {
  TestKind kind = TestKind::m3d;
  double s = 1.0;
  double theta = 0.0;
  std::vector<long> n;
  /// Separations probed at every n; multiplied by n^{-delta_n_exponent}.
  std::vector<double> deltas;
  double delta_n_exponent = 0.0;
  std::size_t reps = 200;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int workers = 1;
  std::optional<CalibrationMethod> calibration;  // per-kind default as in TestConfig
  std::size_t calibration_reps = 0;
  TestParameters params;
  LeastFavorableOptions alternative;
};

struct BoundaryPoint {
  long n = 0;
  double delta = 0.0;
  std::size_t rejections = 0;
  std::size_t reps = 0;
  double power = 0.0;
};

struct BoundaryEstimate {
  long n = 0;
  /// Smallest probed delta with power >= 0.5, linearly interpolated against
  /// the previous grid point; empty when power never reaches 0.5.
  std::optional<double> delta;
  bool at_grid_edge = false;  // reached at the first grid point
};

struct BoundaryResult {
  std::vector<BoundaryPoint> points;  // ordered (n, delta)
  std::vector<BoundaryEstimate> boundaries;
  /// Least-squares slope of log boundary on log n; needs two boundaries.
  std::optional<double> slope;
  std::optional<double> intercept;
};

/// Power against least_favorable alternatives on a (n, delta) grid. Each
/// replicate draws its own sign pattern.
BoundaryResult boundary_probe(std::shared_ptr<const SpectralBasis> basis, const BoundaryProbeConfig& config);

}  // namespace gofkit
