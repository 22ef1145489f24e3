// gofkit command-line front end.
//
// Exit status: 0 success, 1 invalid input (including a missing --seed on a
// randomized path), 2 runtime or numeric failure.

#include "gofkit/bench.hpp"
#include "gofkit/calibrate.hpp"
#include "gofkit/dists.hpp"
#include "gofkit/embedding.hpp"
#include "gofkit/error.hpp"
#include "gofkit/kernels.hpp"
#include "gofkit/spectrum.hpp"
#include "gofkit/spectrum_cache.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace gofkit;
using nlohmann::json;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  int workers = 1;
  bool quiet = false;
  bool no_cache = false;
  std::string cache_dir = ".gofkit-cache";
};

void info(const Globals& g, const std::string& line) {
  if (!g.quiet) std::cerr << line << '\n';
}

std::uint64_t require_seed(const Globals& g, const std::string& what) {
  if (!g.seed) throw ValidationError("missing --seed: " + what + " is randomized and needs an explicit seed");
  return *g.seed;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) throw ValidationError("cannot write " + path.string());
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

// One observation per line, coordinates separated by commas or whitespace.
// A first line that does not parse as numbers is taken as a header.
Points read_points(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    std::vector<double> row;
    bool ok = true;
    std::size_t pos = 0;
    while (pos < line.size()) {
      const std::size_t end = std::min(line.find_first_of(", \t", pos), line.size());
      if (end > pos) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + end, v);
        if (ec != std::errc() || ptr != line.data() + end) {
          ok = false;
          break;
        }
        row.push_back(v);
      }
      pos = end + 1;
    }
    if (!ok) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(rows.front().size()) + " columns");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path.string() + ": no observations");
  Points x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return x;
}

std::string points_csv(const Points& x) {
  std::string out;
  char buf[32];
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", x(i, j));
      if (j) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

// Content-addressed basis lookup under the cache directory.
SpectralBasis cached_basis(const Globals& g, const DecomposeRequest& req) {
  std::string kernel_key = req.kernel_id;
  if (req.factor_trunc) kernel_key += "|factor=" + std::to_string(req.factor_trunc);
  const fs::path path = fs::path(g.cache_dir) / (cache_key(kernel_key, req.null_id, req.trunc, req.nodes) + ".spec");
  if (!g.no_cache && fs::exists(path)) {
    info(g, "spectrum: cache hit " + path.string());
    return from_cache(load_cache(path));
  }
  SpectralBasis basis = build_basis(req);
  if (!g.no_cache) {
    fs::create_directories(path.parent_path());
    save_cache(to_cache(basis), path);
    info(g, "spectrum: cached " + path.string());
  }
  return basis;
}

// --- Calibration files ---------------------------------------------------------------------

constexpr const char* kCalibrationFormat = "gofkit-calibration v1";

std::string calibration_json(const NullCalibration& cal, TestKind kind, long n) {
  json j;
  j["format"] = kCalibrationFormat;
  j["kind"] = to_string(kind);
  j["method"] = to_string(cal.method());
  j["alpha"] = cal.alpha();
  j["quantile"] = cal.quantile();
  j["n"] = n;
  j["replications"] = cal.replications();
  j["seed"] = cal.seed();
  j["truncation_bias"] = cal.truncation_bias();
  j["replicates"] = cal.replicates();
  return j.dump() + "\n";
}

NullCalibration load_calibration(const fs::path& path, TestKind kind, long n) {
  json j;
  try {
    j = json::parse(read_file(path));
    if (j.value("format", std::string{}) != kCalibrationFormat) {
      throw ValidationError(path.string() + ": not a " + std::string(kCalibrationFormat) + " file");
    }
    if (parse_test_kind(j.at("kind").get<std::string>()) != kind) {
      throw ValidationError(path.string() + ": calibration is for test " + j.at("kind").get<std::string>());
    }
    const CalibrationMethod method = parse_calibration_method(j.at("method").get<std::string>());
    const long cal_n = j.at("n").get<long>();
    // The chi-square mixture limit does not depend on n; the others do.
    if (method != CalibrationMethod::chisq_mixture_mc && method != CalibrationMethod::normal && cal_n != n) {
      throw ValidationError(path.string() + ": calibrated for n = " + std::to_string(cal_n) + ", data has n = " +
                            std::to_string(n));
    }
    NullCalibration cal(method, j.at("alpha").get<double>(), j.at("quantile").get<double>(),
                        j.at("replications").get<std::size_t>(), j.at("seed").get<std::uint64_t>(),
                        j.at("replicates").get<std::vector<double>>());
    cal.set_truncation_bias(j.value("truncation_bias", 0.0));
    return cal;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed calibration file: " + e.what());
  }
}

// "auto", "normal", "theory", "mc:REPS" (empirical null runs) or "chisq:REPS".
struct CalibrationChoice {
  CalibrationMethod method;
  std::size_t reps = 0;
};

CalibrationChoice parse_calibration_choice(const std::string& text, TestKind kind) {
  if (text == "auto") {
    switch (kind) {
      case TestKind::mmd: return {CalibrationMethod::chisq_mixture_mc, kDefaultChisqReps};
      case TestKind::m3d: return {CalibrationMethod::normal};
      case TestKind::adaptive: return {CalibrationMethod::empirical_mc, kDefaultEmpiricalReps};
    }
  }
  if (text == "normal") return {CalibrationMethod::normal};
  if (text == "theory") return {CalibrationMethod::theory_loglog};
  auto reps_of = [&](std::size_t prefix) {
    std::size_t r = 0;
    const char* b = text.data() + prefix;
    const auto [ptr, ec] = std::from_chars(b, text.data() + text.size(), r);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw ValidationError("malformed --calibrate '" + text + "'");
    return r;
  };
  if (text.rfind("mc:", 0) == 0) return {CalibrationMethod::empirical_mc, reps_of(3)};
  if (text.rfind("chisq:", 0) == 0) return {CalibrationMethod::chisq_mixture_mc, reps_of(6)};
  throw ValidationError("unknown --calibrate '" + text + "' (auto | normal | theory | mc:REPS | chisq:REPS)");
}

NullCalibration compute_calibration(const Globals& g, const CalibrationChoice& choice, TestKind kind,
                                    const SpectralBasis& basis, const TestParameters& params, long n, double alpha) {
  switch (choice.method) {
    case CalibrationMethod::normal:
      if (kind != TestKind::m3d) throw ValidationError("normal calibration applies to m3d only");
      return normal_calibration(alpha);
    case CalibrationMethod::theory_loglog:
      if (kind != TestKind::adaptive) throw ValidationError("theory threshold applies to adaptive only");
      return theory_calibration(alpha, n);
    case CalibrationMethod::chisq_mixture_mc:
      if (kind != TestKind::mmd) throw ValidationError("chi-square mixture calibration applies to mmd only");
      return chisq_mix_quantile(basis.expanded_eigenvalues(), alpha, choice.reps, require_seed(g, "chisq calibration"),
                                g.workers, eigenvalue_tail_mass(basis));
    case CalibrationMethod::empirical_mc: {
      const std::uint64_t seed = require_seed(g, "Monte-Carlo calibration");
      const AlternativeSpec null = AlternativeSpec::null_of(basis.domain());
      const StatisticFn stat = [&](const Sample& s) { return test_statistic(kind, basis, basis.moments(s), params); };
      const NullSampler sampler = [&](long size, Rng& rng) { return sample(null, size, rng); };
      return empirical_null_quantile(stat, sampler, basis.domain(), n, alpha, choice.reps, seed, g.workers);
    }
  }
  throw ValidationError("unknown calibration");
}

// Shared spectrum flags: a cache file or a (kernel, null) pair.
struct SpectrumFlags {
  std::string spectrum;
  std::string kernel;
  std::string null_id;
  Eigen::Index trunc = 0;
  Eigen::Index nodes = 0;
  std::optional<double> s;

  void add(CLI::App* app, bool with_s = true) {
    app->add_option("--spectrum", spectrum, "Spectrum cache file written by `decompose`");
    app->add_option("--kernel", kernel, "Kernel id when no --spectrum is given (cosine, cosine-analytic, gaussian:bw=S)");
    app->add_option("--null", null_id, "Null id when no --spectrum is given (uniform-cube:d=D | uniform-sphere:d=D)");
    app->add_option("--trunc", trunc, "Truncation K with --kernel (0: default rule)")->capture_default_str();
    app->add_option("--nodes", nodes, "Quadrature nodes with --kernel (0: max(4K, 256))")->capture_default_str();
    if (with_s) app->add_option("--s", s, "Decay exponent override for schedules and grids (default: estimated)");
  }

  SpectralBasis resolve(const Globals& g) const {
    std::optional<SpectralBasis> basis;
    if (!spectrum.empty()) {
      if (!kernel.empty()) throw ValidationError("give either --spectrum or --kernel, not both");
      basis = from_cache(load_cache(spectrum));
    } else {
      if (kernel.empty() || null_id.empty()) throw ValidationError("missing --spectrum (or --kernel with --null)");
      basis = cached_basis(g, DecomposeRequest{kernel, null_id, trunc, nodes});
    }
    return s ? basis->with_decay_exponent(*s) : *basis;
  }
};

struct TestFlags {
  std::optional<double> rho;
  double theta = 0.0;
  double c = 1.0;
  std::string grid = "auto";

  void add(CLI::App* app) {
    app->add_option("--rho", rho, "m3d: moderation parameter (default: schedule c n^{-2s(theta+1)/(4s+theta+1)})");
    app->add_option("--theta", theta, "m3d: schedule theta")->capture_default_str();
    app->add_option("--c", c, "m3d: schedule constant")->capture_default_str();
    app->add_option("--grid", grid, "adaptive: `auto` or ';'-separated rho values")->capture_default_str();
  }

  TestParameters params() const {
    TestParameters p;
    p.rho = rho;
    p.theta = theta;
    p.schedule_c = c;
    if (grid != "auto") {
      std::vector<double> values;
      std::stringstream ss(grid);
      std::string item;
      while (std::getline(ss, item, ';')) {
        try {
          std::size_t used = 0;
          values.push_back(std::stod(item, &used));
          if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
          throw ValidationError("malformed --grid value '" + item + "'");
        }
      }
      p.grid = custom_grid(values);
    }
    return p;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gofkit: kernel-embedding goodness-of-fit tests (MMD, moderated MMD, adaptive)"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.set_config("--config", "", "TOML/INI file of flag defaults; command-line flags override it");
  Globals g;
  app.add_option("--seed", g.seed, "Master seed; required by every randomized path");
  app.add_option("--workers", g.workers, "Worker threads for Monte-Carlo loops")->capture_default_str()->check(
      CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "Suppress progress messages on stderr");
  app.add_flag("--no-cache", g.no_cache, "Recompute spectra instead of reusing the cache");
  app.add_option("--cache-dir", g.cache_dir, "Directory of content-addressed spectrum caches")->capture_default_str();

  // decompose
  auto* decompose = app.add_subcommand("decompose", "Mercer decomposition of a kernel under the null; writes a cache file");
  DecomposeRequest dreq;
  std::string dout;
  decompose->add_option("--kernel", dreq.kernel_id, "Kernel id (cosine, cosine-analytic, gaussian:bw=S, constant, linear)")
      ->required();
  decompose->add_option("--null", dreq.null_id, "Null id: uniform-cube:d=D or uniform-sphere:d=D")->required();
  decompose->add_option("--trunc", dreq.trunc, "Truncation K (sphere: max degree; 0: default rule)")->capture_default_str();
  decompose->add_option("--nodes", dreq.nodes, "Quadrature nodes (0: max(4K, 256))")->capture_default_str();
  decompose->add_option("--factor-trunc", dreq.factor_trunc, "Cube d > 1: 1-D factor truncation (0: default)")
      ->capture_default_str();
  decompose->add_option("--out", dout, "Output spectrum file")->required();

  // test
  auto* test = app.add_subcommand("test", "Run one goodness-of-fit test on a data file");
  std::string kind_text, data_path, calibrate_text = "auto", calibration_file;
  double alpha = 0.05;
  bool as_json = false;
  SpectrumFlags tspec;
  TestFlags tflags;
  test->add_option("--kind", kind_text, "mmd | m3d | adaptive")->required();
  tspec.add(test);
  test->add_option("--data", data_path, "CSV with one observation per row")->required();
  test->add_option("--alpha", alpha, "Level")->capture_default_str();
  tflags.add(test);
  test->add_option("--calibrate", calibrate_text,
                   "auto (mmd chisq:100000, m3d normal, adaptive mc:200) | normal | theory | mc:REPS | chisq:REPS")
      ->capture_default_str();
  test->add_option("--calibration", calibration_file, "Use a calibration file from `calibrate` instead");
  test->add_flag("--json", as_json, "Print the single-line JSON record instead of key: value text");

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Simulate a null threshold and store it with its replicates");
  std::string ckind, cmethod = "auto", cout_path;
  long cn = 0;
  double calpha = 0.05;
  std::size_t creps = 0;
  SpectrumFlags cspec;
  TestFlags cflags;
  calibrate->add_option("--kind", ckind, "mmd | m3d | adaptive")->required();
  cspec.add(calibrate);
  calibrate->add_option("--n", cn, "Sample size")->required();
  calibrate->add_option("--alpha", calpha, "Level")->capture_default_str();
  calibrate->add_option("--method", cmethod, "auto | chisq-mixture-mc | empirical-mc | normal | theory-loglog")
      ->capture_default_str();
  calibrate->add_option("--reps", creps, "Monte-Carlo replications (0: 100000 chisq, 200 empirical)")
      ->capture_default_str();
  cflags.add(calibrate);
  calibrate->add_option("--out", cout_path, "Calibration file (JSON)")->required();

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "Draw a sample from an alternative and write it as CSV");
  std::string alt_text, sample_out;
  long sn = 0;
  sample_cmd->add_option("--alt", alt_text, "Alternative spec, e.g. vmf:d=3,kappa=2 or marron-wand:smooth-comb:d=2")
      ->required();
  sample_cmd->add_option("--n", sn, "Number of draws")->required();
  sample_cmd->add_option("--out", sample_out, "Output CSV (default: stdout)");

  // power
  auto* power = app.add_subcommand("power", "Run a power experiment plan (JSON) and emit CSV plus a plot script");
  std::string plan_path, power_out;
  power->add_option("--plan", plan_path, "Experiment plan file (JSON)")->required();
  power->add_option("--out", power_out, "Output directory (default: the plan's output field)");

  // reproduce
  auto* reproduce = app.add_subcommand("reproduce", "Re-run a packaged experiment");
  std::string figure, scale = "desk", repro_out;
  reproduce->add_option("figure", figure, "Experiment name: fig1")->required()->check(CLI::IsMember({"fig1"}));
  reproduce->add_option("--scale", scale, "desk (d = 5, n = 200..1000, 100 reps)")
      ->capture_default_str()
      ->check(CLI::IsMember({"desk"}));
  reproduce->add_option("--out", repro_out, "Output directory (default: fig1-desk)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*decompose) {
      const SpectralBasis basis = cached_basis(g, dreq);
      save_cache(to_cache(basis), dout);
      std::cout << "kernel: " << basis.kernel_id() << "\nnull: " << basis.null_id()
                << "\nblocks: " << basis.blocks() << "\ntruncation: " << basis.truncation()
                << "\ndecay_exponent: " << fmt(basis.decay_exponent()) << "\neigenvalues:";
      for (Eigen::Index k = 0; k < std::min<Eigen::Index>(basis.blocks(), 8); ++k)
        std::cout << ' ' << fmt(basis.eigenvalues()(k));
      std::cout << (basis.blocks() > 8 ? " ..." : "") << "\nout: " << dout << '\n';
    } else if (*test) {
      const TestKind kind = parse_test_kind(kind_text);
      const SpectralBasis basis = tspec.resolve(g);
      const Sample sample(read_points(data_path), basis.domain());
      const TestParameters params = tflags.params();
      const long n = static_cast<long>(sample.size());
      const NullCalibration cal =
          calibration_file.empty()
              ? compute_calibration(g, parse_calibration_choice(calibrate_text, kind), kind, basis, params, n, alpha)
              : load_calibration(calibration_file, kind, n);
      const TestReport report = run_test(kind, basis, sample, alpha, cal, params);
      std::cout << (as_json ? report.to_json() + "\n" : report.to_text());
    } else if (*calibrate) {
      const TestKind kind = parse_test_kind(ckind);
      const SpectralBasis basis = cspec.resolve(g);
      CalibrationChoice choice = parse_calibration_choice("auto", kind);
      if (cmethod != "auto") choice.method = parse_calibration_method(cmethod);
      if (creps) choice.reps = creps;
      if (choice.reps == 0) {
        choice.reps = choice.method == CalibrationMethod::chisq_mixture_mc ? kDefaultChisqReps : kDefaultEmpiricalReps;
      }
      const NullCalibration cal = compute_calibration(g, choice, kind, basis, cflags.params(), cn, calpha);
      write_file(cout_path, calibration_json(cal, kind, cn));
      std::cout << "method: " << to_string(cal.method()) << "\nalpha: " << fmt(cal.alpha())
                << "\nquantile: " << fmt(cal.quantile()) << "\nreplications: " << cal.replications()
                << "\nout: " << cout_path << '\n';
    } else if (*sample_cmd) {
      const AlternativeSpec spec = AlternativeSpec::parse(alt_text);
      if (sn < 1) throw ValidationError("--n must be >= 1");
      const std::string csv = points_csv(gofkit::sample(spec, sn, require_seed(g, "sampling")).points());
      if (sample_out.empty()) std::cout << csv;
      else write_file(sample_out, csv);
    } else if (*power || *reproduce) {
      ExperimentPlan plan;
      std::string out_dir;
      if (*power) {
        plan = ExperimentPlan::from_json(read_file(plan_path));
        if (g.seed) plan.seed = g.seed;
        if (!plan.seed) throw ValidationError("missing --seed: the plan has no seed and power runs are randomized");
        out_dir = power_out.empty() ? plan.output : power_out;
      } else {
        plan = desk_fig1_plan(require_seed(g, "reproduce"));
        out_dir = repro_out.empty() ? plan.output : repro_out;
      }
      if (g.workers > 1) plan.workers = g.workers;
      plan.validate();
      info(g, "power: " + std::to_string(plan.alternatives.size() * plan.tests.size() * plan.n.size() * plan.reps) +
                  " replicates");
      const PowerTable table = run_plan(plan, cached_basis(g, plan.spectrum));
      const fs::path csv = emit(table, out_dir);
      write_file(fs::path(out_dir) / "plan.json", plan.to_json() + "\n");
      for (const auto& c : aggregate(table)) {
        info(g, c.test + "  " + c.alternative + "  n=" + std::to_string(c.n) + "  error=" + fmt(c.accept_rate) +
                    "  se=" + fmt(c.std_error));
      }
      std::cout << "csv: " << csv.string() << "\nplot: " << (fs::path(out_dir) / "plot_power.py").string() << '\n';
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
