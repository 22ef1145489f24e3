#include "gofkit/bench.hpp"
#include "gofkit/error.hpp"
#include "gofkit/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace gofkit {

namespace {

using nlohmann::json;

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void check_method(TestKind kind, CalibrationMethod method) {
  const bool ok = method == CalibrationMethod::empirical_mc ||
                  (kind == TestKind::mmd && method == CalibrationMethod::chisq_mixture_mc) ||
                  (kind == TestKind::m3d && method == CalibrationMethod::normal) ||
                  (kind == TestKind::adaptive && method == CalibrationMethod::theory_loglog);
  require(ok, "calibration " + to_string(method) + " does not apply to test " + to_string(kind));
}

CalibrationMethod default_method(TestKind kind) {
  switch (kind) {
    case TestKind::mmd: return CalibrationMethod::chisq_mixture_mc;
    case TestKind::m3d: return CalibrationMethod::normal;
    case TestKind::adaptive: return CalibrationMethod::empirical_mc;
  }
  return CalibrationMethod::normal;
}

NullCalibration calibrate_test(TestKind kind, CalibrationMethod method, std::size_t reps, const SpectralBasis& basis,
                               const TestParameters& params, long n, double alpha, std::uint64_t seed, int workers) {
  check_method(kind, method);
  switch (method) {
    case CalibrationMethod::normal: return normal_calibration(alpha);
    case CalibrationMethod::theory_loglog: return theory_calibration(alpha, n);
    case CalibrationMethod::chisq_mixture_mc:
      return chisq_mix_quantile(basis.expanded_eigenvalues(), alpha, reps ? reps : kDefaultChisqReps, seed, workers,
                                eigenvalue_tail_mass(basis));
    case CalibrationMethod::empirical_mc: {
      const AlternativeSpec null = AlternativeSpec::null_of(basis.domain());
      const StatisticFn stat = [&](const Sample& s) { return test_statistic(kind, basis, basis.moments(s), params); };
      const NullSampler sampler = [&](long size, Rng& rng) { return sample(null, size, rng); };
      return empirical_null_quantile(stat, sampler, basis.domain(), n, alpha, reps ? reps : kDefaultEmpiricalReps, seed,
                                     workers);
    }
  }
  throw ValidationError("unknown calibration method");
}

double threshold_of(const NullCalibration& cal, double alpha) {
  return cal.alpha() == alpha ? cal.quantile() : cal.quantile_at(alpha);
}

}  // namespace

// --- Plan ----------------------------------------------------------------------------------

std::string TestConfig::label() const { return oracle_rho ? "m3d-oracle" : to_string(kind); }

CalibrationMethod TestConfig::method() const { return calibration.value_or(default_method(kind)); }

void ExperimentPlan::validate() const {
  const Domain null = Domain::parse(null_id);
  require(Domain::parse(spectrum.null_id) == null, "plan: spectrum null " + spectrum.null_id + " differs from " + null_id);
  require(!alternatives.empty(), "plan: no alternatives");
  require(!tests.empty(), "plan: no tests");
  require(!n.empty(), "plan: empty n list");
  require(reps >= 1, "plan: reps must be >= 1");
  require(alpha > 0.0 && alpha < 1.0, "plan: alpha must lie in (0, 1)");
  require(workers >= 1, "plan: workers must be >= 1");
  for (const auto& text : alternatives) {
    const AlternativeSpec spec = AlternativeSpec::parse(text);
    require(spec.domain() == null, "plan: alternative " + text + " does not live on " + null_id);
  }
  std::set<std::string> labels;
  for (const auto& t : tests) {
    check_method(t.kind, t.method());
    require(labels.insert(t.label()).second, "plan: duplicate test " + t.label());
    if (t.oracle_rho) {
      require(t.kind == TestKind::m3d, "plan: oracle_rho applies to m3d only");
      require(t.method() == CalibrationMethod::normal, "plan: oracle_rho needs the normal calibration");
    }
    if (t.kind == TestKind::adaptive || t.oracle_rho) {
      for (long m : n) require(m >= 16, "plan: n values must be >= 16 with the adaptive test");
    }
  }
  for (long m : n) require(m >= 2, "plan: n values must be >= 2");
  // Sampling the alternatives is randomized, so every plan needs a seed.
  require(seed.has_value(), "plan: missing seed (set \"seed\" or pass --seed)");
}

ExperimentPlan ExperimentPlan::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("plan: malformed JSON: ") + e.what());
  }
  require(j.is_object(), "plan: top level must be an object");
  static const std::set<std::string> known = {"null",  "kernel", "trunc", "nodes", "factor_trunc", "alternatives",
                                              "tests", "n",      "reps",  "alpha", "seed",         "workers",
                                              "output"};
  for (const auto& [key, value] : j.items()) require(known.count(key) == 1, "plan: unknown key '" + key + "'");
  for (const char* key : {"null", "alternatives", "tests", "n"}) {
    require(j.contains(key), std::string("plan: missing required field '") + key + "'");
  }
  ExperimentPlan plan;
  try {
    plan.null_id = j.at("null").get<std::string>();
    plan.spectrum.null_id = plan.null_id;
    plan.spectrum.kernel_id = j.value("kernel", std::string("cosine"));
    plan.spectrum.trunc = j.value("trunc", Eigen::Index{0});
    plan.spectrum.nodes = j.value("nodes", Eigen::Index{0});
    plan.spectrum.factor_trunc = j.value("factor_trunc", Eigen::Index{0});
    plan.alternatives = j.at("alternatives").get<std::vector<std::string>>();
    plan.n = j.at("n").get<std::vector<long>>();
    plan.reps = j.value("reps", std::size_t{100});
    plan.alpha = j.value("alpha", 0.05);
    if (j.contains("seed")) plan.seed = j.at("seed").get<std::uint64_t>();
    plan.workers = j.value("workers", 1);
    plan.output = j.value("output", std::string("out"));
    static const std::set<std::string> test_keys = {"kind", "calibration", "calibration_reps", "s",
                                                    "rho",  "theta",       "c",                "oracle_rho"};
    for (const auto& t : j.at("tests")) {
      require(t.is_object() && t.contains("kind"), "plan: each test needs a kind");
      for (const auto& [key, value] : t.items()) require(test_keys.count(key) == 1, "plan: unknown test key '" + key + "'");
      TestConfig cfg;
      cfg.kind = parse_test_kind(t.at("kind").get<std::string>());
      if (t.contains("calibration")) cfg.calibration = parse_calibration_method(t.at("calibration").get<std::string>());
      cfg.calibration_reps = t.value("calibration_reps", std::size_t{0});
      if (t.contains("s")) cfg.s = t.at("s").get<double>();
      if (t.contains("rho")) cfg.params.rho = t.at("rho").get<double>();
      cfg.params.theta = t.value("theta", 0.0);
      cfg.params.schedule_c = t.value("c", 1.0);
      cfg.oracle_rho = t.value("oracle_rho", false);
      plan.tests.push_back(cfg);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("plan: wrong field type: ") + e.what());
  }
  return plan;
}

std::string ExperimentPlan::to_json() const {
  json j;
  j["null"] = null_id;
  j["kernel"] = spectrum.kernel_id;
  j["trunc"] = spectrum.trunc;
  j["nodes"] = spectrum.nodes;
  j["factor_trunc"] = spectrum.factor_trunc;
  j["alternatives"] = alternatives;
  j["n"] = n;
  j["reps"] = reps;
  j["alpha"] = alpha;
  if (seed) j["seed"] = *seed;
  j["workers"] = workers;
  j["output"] = output;
  j["tests"] = json::array();
  for (const auto& t : tests) {
    json o;
    o["kind"] = to_string(t.kind);
    if (t.calibration) o["calibration"] = to_string(*t.calibration);
    if (t.calibration_reps) o["calibration_reps"] = t.calibration_reps;
    if (t.s) o["s"] = *t.s;
    if (t.params.rho) o["rho"] = *t.params.rho;
    if (t.params.theta != 0.0) o["theta"] = t.params.theta;
    if (t.params.schedule_c != 1.0) o["c"] = t.params.schedule_c;
    if (t.oracle_rho) o["oracle_rho"] = true;
    j["tests"].push_back(o);
  }
  return j.dump(2);
}

ExperimentPlan desk_fig1_plan(std::uint64_t seed) {
  ExperimentPlan plan;
  plan.null_id = "uniform-cube:d=5";
  plan.spectrum = DecomposeRequest{"cosine-analytic", plan.null_id, 256};
  // The uncontaminated alternatives are rejected every time from n = 200 on
  // (chi^2 between 11 and 59); a 10% contamination spreads the curves over n.
  plan.alternatives = {"gaussian-mixture:d=5,k=5,scale=0.05,seed=1,weight=0.1",
                       "marron-wand:skewed-unimodal:d=5,weight=0.1", "marron-wand:asymmetric-claw:d=5,weight=0.1"};
  TestConfig mmd;
  mmd.kind = TestKind::mmd;
  TestConfig adaptive;
  adaptive.kind = TestKind::adaptive;
  adaptive.s = 1.0;
  plan.tests.push_back(mmd);
  plan.tests.push_back(adaptive);
  plan.n = {200, 400, 600, 800, 1000};
  plan.reps = 100;
  plan.alpha = 0.05;
  plan.seed = seed;
  plan.output = "fig1-desk";
  return plan;
}

// --- Execution -----------------------------------------------------------------------------

std::uint64_t replicate_seed(std::uint64_t master, const std::string& alternative, const std::string& test, long n,
                             std::size_t replicate) {
  return derive_seed(master, {hash_label(alternative), hash_label(test), static_cast<std::uint64_t>(n),
                              static_cast<std::uint64_t>(replicate)});
}

PowerTable run_plan(const ExperimentPlan& plan) {
  plan.validate();
  return run_plan(plan, build_basis(plan.spectrum));
}

PowerTable run_plan(const ExperimentPlan& plan, const SpectralBasis& basis) {
  plan.validate();
  require(basis.domain() == Domain::parse(plan.null_id), "run_plan: basis lives on " + basis.null_id() + ", plan on " +
                                                             plan.null_id);
  const std::uint64_t master = *plan.seed;
  const std::size_t R = plan.reps;
  PowerTable table;
  for (const auto& alt_text : plan.alternatives) {
    const AlternativeSpec alt = AlternativeSpec::parse(alt_text);
    for (const auto& test : plan.tests) {
      const SpectralBasis tb = test.s ? basis.with_decay_exponent(*test.s) : basis;
      const std::string label = test.label();
      for (long n : plan.n) {
        // Calibration depends on (test, n) only, so it is shared by alternatives.
        const std::uint64_t cal_seed = derive_seed(master, {hash_label("calibration"), hash_label(label),
                                                            static_cast<std::uint64_t>(n)});
        const NullCalibration cal = calibrate_test(test.kind, test.method(), test.calibration_reps, tb, test.params, n,
                                                   plan.alpha, cal_seed, plan.workers);
        const double threshold = threshold_of(cal, plan.alpha);

        std::vector<double> rhos{0.0};
        if (test.oracle_rho) rhos = (test.params.grid ? *test.params.grid : adaptive_grid(n, tb.decay_exponent())).values;
        Eigen::MatrixXd stats(static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(rhos.size()));
        std::vector<std::uint64_t> seeds(R);
        parallel_for(R, plan.workers, [&](std::size_t r) {
          seeds[r] = replicate_seed(master, alt_text, label, n, r);
          const SampleMoments m = tb.moments(sample(alt, n, seeds[r]));
          for (std::size_t k = 0; k < rhos.size(); ++k) {
            TestParameters p = test.params;
            if (test.oracle_rho) p.rho = rhos[k];
            stats(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = test_statistic(test.kind, tb, m, p);
          }
        });
        Eigen::Index best = 0;
        if (test.oracle_rho) {
          const Eigen::VectorXd rates = (stats.array() > threshold).cast<double>().colwise().sum().transpose();
          rates.maxCoeff(&best);  // first maximum on ties
        }
        for (std::size_t r = 0; r < R; ++r) {
          const double stat = stats(static_cast<Eigen::Index>(r), best);
          table.rows.push_back({label, n, alt.dim, alt_text, r, stat > threshold, stat, threshold, seeds[r]});
        }
      }
    }
  }
  return table;
}

// --- Aggregation ---------------------------------------------------------------------------

std::vector<CellSummary> aggregate(const PowerTable& table) {
  std::map<std::tuple<std::string, std::string, long>, CellSummary> cells;
  for (const auto& row : table.rows) {
    auto& c = cells[{row.test, row.alternative, row.n}];
    c.test = row.test;
    c.alternative = row.alternative;
    c.n = row.n;
    c.dim = row.dim;
    ++c.reps;
    c.rejections += row.reject ? 1 : 0;
  }
  std::vector<CellSummary> out;
  for (auto& [key, c] : cells) {
    c.reject_rate = static_cast<double>(c.rejections) / static_cast<double>(c.reps);
    c.accept_rate = 1.0 - c.reject_rate;
    c.std_error = std::sqrt(c.reject_rate * (1.0 - c.reject_rate) / static_cast<double>(c.reps));
    out.push_back(c);
  }
  return out;
}

PowerTable merge(const std::vector<PowerTable>& parts) {
  PowerTable out;
  for (const auto& p : parts) out.rows.insert(out.rows.end(), p.rows.begin(), p.rows.end());
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const PowerRow& a, const PowerRow& b) {
    return std::tie(a.alternative, a.test, a.n, a.replicate) < std::tie(b.alternative, b.test, b.n, b.replicate);
  });
  return out;
}

// --- CSV -----------------------------------------------------------------------------------

namespace {

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  require(!quoted, "CSV line " + std::to_string(line_no) + ": unterminated quote");
  return fields;
}

template <typename T>
T parse_field(const std::string& text, const char* name, std::size_t line_no) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("CSV line " + std::to_string(line_no) + ": malformed " + name + " '" + text + "'");
  }
  return v;
}

}  // namespace

std::string to_csv(const PowerTable& table) {
  std::string out = std::string(kPowerCsvHeader) + "\n";
  for (const auto& r : table.rows) {
    out += quote(r.test) + ',' + std::to_string(r.n) + ',' + std::to_string(r.dim) + ',' + quote(r.alternative) + ',' +
           std::to_string(r.replicate) + ',' + (r.reject ? "1" : "0") + ',' + num(r.statistic) + ',' +
           num(r.threshold) + ',' + std::to_string(r.seed) + '\n';
  }
  return out;
}

PowerTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == kPowerCsvHeader,
          std::string("CSV: expected header '") + kPowerCsvHeader + "'");
  PowerTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line, line_no);
    require(f.size() == 9, "CSV line " + std::to_string(line_no) + ": expected 9 fields, got " + std::to_string(f.size()));
    PowerRow r;
    r.test = f[0];
    r.n = parse_field<long>(f[1], "n", line_no);
    r.dim = parse_field<int>(f[2], "dim", line_no);
    r.alternative = f[3];
    r.replicate = parse_field<std::size_t>(f[4], "replicate", line_no);
    require(f[5] == "0" || f[5] == "1", "CSV line " + std::to_string(line_no) + ": reject must be 0 or 1");
    r.reject = f[5] == "1";
    r.statistic = parse_field<double>(f[6], "statistic", line_no);
    r.threshold = parse_field<double>(f[7], "threshold", line_no);
    r.seed = parse_field<std::uint64_t>(f[8], "seed", line_no);
    table.rows.push_back(std::move(r));
  }
  return table;
}

std::string summary_csv(const std::vector<CellSummary>& cells) {
  std::string out = "test,alternative,n,dim,reps,rejections,reject_rate,accept_rate,std_error\n";
  for (const auto& c : cells) {
    out += quote(c.test) + ',' + quote(c.alternative) + ',' + std::to_string(c.n) + ',' + std::to_string(c.dim) + ',' +
           std::to_string(c.reps) + ',' + std::to_string(c.rejections) + ',' + num(c.reject_rate) + ',' +
           num(c.accept_rate) + ',' + num(c.std_error) + '\n';
  }
  return out;
}

namespace {

constexpr const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Error (probability of accepting H0) against sample size, one panel per alternative."""
import csv
import os
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "summary.csv")
curves = defaultdict(lambda: defaultdict(list))
with open(path, newline="") as fh:
    for row in csv.DictReader(fh):
        curves[row["alternative"]][row["test"]].append(
            (int(row["n"]), float(row["accept_rate"]), float(row["std_error"])))

fig, axes = plt.subplots(1, len(curves), figsize=(4.5 * len(curves), 3.6), squeeze=False)
for ax, (alt, tests) in zip(axes[0], sorted(curves.items())):
    for test, pts in sorted(tests.items()):
        pts.sort()
        ns = [p[0] for p in pts]
        ax.errorbar(ns, [p[1] for p in pts], yerr=[2 * p[2] for p in pts], marker="o", capsize=3, label=test)
    ax.set_title(alt, fontsize=8)
    ax.set_xlabel("sample size n")
    ax.set_ylabel("P(accept H0)")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
fig.tight_layout()
out = os.path.join(here, "power.png")
fig.savefig(out, dpi=120)
print(out)
)PY";

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << content;
  if (!out) throw ValidationError("write failed: " + path.string());
}

}  // namespace

std::filesystem::path emit(const PowerTable& table, const std::filesystem::path& dir) {
  require(!table.rows.empty(), "emit: empty power table");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create " + dir.string() + ": " + ec.message());
  const auto csv = dir / "power.csv";
  write_file(csv, to_csv(table));
  write_file(dir / "summary.csv", summary_csv(aggregate(table)));
  write_file(dir / "plot_power.py", kPlotScript);
  return csv;
}

// --- Boundary probe ------------------------------------------------------------------------

BoundaryResult boundary_probe(std::shared_ptr<const SpectralBasis> basis, const BoundaryProbeConfig& config) {
  require(basis != nullptr, "boundary_probe: null basis");
  require(!config.n.empty() && !config.deltas.empty(), "boundary_probe: empty n or delta grid");
  require(std::is_sorted(config.deltas.begin(), config.deltas.end()), "boundary_probe: delta grid must be ascending");
  require(config.deltas.front() >= 0.0, "boundary_probe: deltas must be >= 0");
  require(config.reps >= 1, "boundary_probe: reps must be >= 1");
  const CalibrationMethod method = config.calibration.value_or(default_method(config.kind));
  const SpectralBasis tb = basis->with_decay_exponent(config.s);
  const std::string label = to_string(config.kind);

  BoundaryResult result;
  for (long n : config.n) {
    const NullCalibration cal =
        calibrate_test(config.kind, method, config.calibration_reps, tb, config.params, n, config.alpha,
                       derive_seed(config.seed, {hash_label("calibration"), hash_label(label), static_cast<std::uint64_t>(n)}),
                       config.workers);
    const double threshold = threshold_of(cal, config.alpha);
    const double scale = std::pow(static_cast<double>(n), -config.delta_n_exponent);
    const AlternativeSpec null = AlternativeSpec::null_of(tb.domain());
    for (std::size_t j = 0; j < config.deltas.size(); ++j) {
      const double delta = config.deltas[j] * scale;
      std::vector<char> rejected(config.reps, 0);
      parallel_for(config.reps, config.workers, [&](std::size_t r) {
        const std::uint64_t seed = derive_seed(config.seed, {hash_label(label), static_cast<std::uint64_t>(n),
                                                             static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(r)});
        const AlternativeSpec alt =
            delta > 0.0 ? least_favorable(basis, n, config.s, config.theta, delta, derive_seed(seed, {1}), config.alternative)
                        : null;
        const SampleMoments m = tb.moments(sample(alt, n, derive_seed(seed, {2})));
        rejected[r] = test_statistic(config.kind, tb, m, config.params) > threshold;
      });
      BoundaryPoint p{n, delta, 0, config.reps, 0.0};
      for (char c : rejected) p.rejections += static_cast<std::size_t>(c);
      p.power = static_cast<double>(p.rejections) / static_cast<double>(p.reps);
      result.points.push_back(p);
    }
  }

  std::vector<double> lx, ly;
  for (long n : config.n) {
    BoundaryEstimate est{n, std::nullopt, false};
    const BoundaryPoint* prev = nullptr;
    for (const auto& p : result.points) {
      if (p.n != n) continue;
      if (p.power >= 0.5) {
        if (prev == nullptr) {
          est.delta = p.delta;
          est.at_grid_edge = true;
        } else {
          const double t = (0.5 - prev->power) / (p.power - prev->power);
          est.delta = prev->delta + t * (p.delta - prev->delta);
        }
        break;
      }
      prev = &p;
    }
    if (est.delta && *est.delta > 0.0) {
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(std::log(*est.delta));
    }
    result.boundaries.push_back(est);
  }
  if (lx.size() >= 2) {
    const Eigen::Map<const Eigen::VectorXd> x(lx.data(), static_cast<Eigen::Index>(lx.size()));
    const Eigen::Map<const Eigen::VectorXd> y(ly.data(), static_cast<Eigen::Index>(ly.size()));
    const double mx = x.mean(), my = y.mean();
    const double sxx = (x.array() - mx).square().sum();
    if (sxx > 0.0) {
      result.slope = ((x.array() - mx) * (y.array() - my)).sum() / sxx;
      result.intercept = my - *result.slope * mx;
    }
  }
  return result;
}

}  // namespace gofkit
