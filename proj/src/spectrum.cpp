#include "gofkit/spectrum.hpp"

#include "gofkit/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace gofkit {

// --- FeatureMap defaults ---------------------------------------------------------

Eigen::MatrixXd FeatureMap::features(const Points&) const {
  throw ValidationError("this basis has no explicit eigenfunctions (evaluation goes through block kernels)");
}

SampleMoments FeatureMap::moments(const Points& x) const {
  const Eigen::MatrixXd f = features(x);
  SampleMoments m;
  m.n = x.rows();
  m.mean_sq = f.colwise().mean().transpose().array().square();
  m.diag = f.array().square().colwise().mean().transpose();
  return m;
}

Eigen::VectorXd FeatureMap::pair_terms(PointRef x, PointRef y) const {
  Points both(2, x.size());
  both.row(0) = x;
  both.row(1) = y;
  const Eigen::MatrixXd f = features(both);
  return f.row(0).cwiseProduct(f.row(1)).transpose();
}

// --- SpectralBasis -----------------------------------------------------------------

SpectralBasis::SpectralBasis(Eigen::VectorXd eigenvalues, Eigen::VectorXd multiplicities,
                             std::shared_ptr<const FeatureMap> map, Domain domain, bool degenerate,
                             std::string kernel_id, std::optional<double> decay_exponent)
    : eigenvalues_(std::move(eigenvalues)),
      multiplicities_(std::move(multiplicities)),
      map_(std::move(map)),
      domain_(domain),
      degenerate_(degenerate),
      kernel_id_(std::move(kernel_id)) {
  require(map_ != nullptr, "spectral basis needs a feature map");
  require(eigenvalues_.size() >= 1, "spectral basis needs at least one eigenvalue");
  require(multiplicities_.size() == eigenvalues_.size(), "multiplicity count differs from eigenvalue count");
  require(map_->block_count() == eigenvalues_.size(), "feature map block count differs from eigenvalue count");
  for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) {
    require(eigenvalues_(k) > 0.0, "eigenvalues must be positive");
    require(multiplicities_(k) >= 1.0, "multiplicities must be >= 1");
    if (k > 0) require(eigenvalues_(k) <= eigenvalues_(k - 1), "eigenvalues must be nonincreasing");
  }
  if (decay_exponent) {
    require(*decay_exponent > 0.0, "decay exponent must be positive");
    decay_ = *decay_exponent;
  } else if (truncation() >= 8) {
    decay_ = estimate_decay_exponent(expanded_eigenvalues()).s;
  }
}

SpectralBasis::SpectralBasis(Eigen::VectorXd eigenvalues, std::shared_ptr<const FeatureMap> map, Domain domain,
                             bool degenerate, std::string kernel_id, std::optional<double> decay_exponent)
    : SpectralBasis(eigenvalues, Eigen::VectorXd::Ones(eigenvalues.size()), std::move(map), domain, degenerate,
                    std::move(kernel_id), decay_exponent) {}

Eigen::Index SpectralBasis::truncation() const {
  return static_cast<Eigen::Index>(std::llround(multiplicities_.sum()));
}

Eigen::VectorXd SpectralBasis::expanded_eigenvalues() const {
  Eigen::VectorXd out(truncation());
  Eigen::Index pos = 0;
  for (Eigen::Index b = 0; b < blocks(); ++b) {
    const auto m = static_cast<Eigen::Index>(std::llround(multiplicities_(b)));
    out.segment(pos, m).setConstant(eigenvalues_(b));
    pos += m;
  }
  return out;
}

SampleMoments SpectralBasis::moments(const Sample& sample) const {
  require(sample.dim() == domain_.dim, "sample dimension " + std::to_string(sample.dim()) +
                                           " does not match basis domain " + domain_.id());
  return map_->moments(sample.points());
}

SpectralBasis SpectralBasis::truncated(Eigen::Index blocks) const {
  require(blocks >= 1 && blocks <= this->blocks(), "truncation outside [1, blocks]");
  return SpectralBasis(eigenvalues_.head(blocks), multiplicities_.head(blocks), map_->truncated(blocks), domain_,
                       degenerate_, kernel_id_, decay_);
}

SpectralBasis SpectralBasis::scaled(double c) const {
  require(c > 0.0, "scale must be positive");
  return SpectralBasis(eigenvalues_ * c, multiplicities_, map_, domain_, degenerate_, kernel_id_, decay_);
}

SpectralBasis SpectralBasis::with_decay_exponent(double s) const {
  return SpectralBasis(eigenvalues_, multiplicities_, map_, domain_, degenerate_, kernel_id_, s);
}

ModeratedSpectrum::ModeratedSpectrum(SpectralBasis basis, double rho) : basis_(std::move(basis)), rho_(rho) {
  require(rho >= 0.0 && std::isfinite(rho), "rho must be finite and nonnegative");
  moderated_ = moderate(basis_.eigenvalues().array(), rho_).matrix();
}

// --- Nystrom --------------------------------------------------------------------------

NystromMap::NystromMap(KernelFn kernel, Quadrature quad, Eigen::MatrixXd node_values, Eigen::VectorXd eigenvalues,
                       bool centered)
    : kernel_(std::move(kernel)),
      quad_(std::move(quad)),
      node_values_(std::move(node_values)),
      eigenvalues_(std::move(eigenvalues)),
      centered_(centered) {
  require(node_values_.rows() == quad_.size() && node_values_.cols() == eigenvalues_.size(),
          "nystrom map: node value matrix has the wrong shape");
  const Eigen::VectorXd inv_lambda = eigenvalues_.cwiseInverse();
  weighted_ = quad_.weights.asDiagonal() * node_values_ * inv_lambda.asDiagonal();
  offset_ = Eigen::RowVectorXd::Zero(eigenvalues_.size());
  if (centered_) {
    const Eigen::Index n = quad_.size();
    node_row_mean_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double m = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) m += quad_.weights(j) * kernel_(quad_.nodes.row(i), quad_.nodes.row(j));
      node_row_mean_(i) = m;
    }
    offset_ = node_row_mean_.transpose() * weighted_;
  }
}

Eigen::MatrixXd NystromMap::features(const Points& x) const {
  const Eigen::Index n = x.rows();
  const Eigen::Index nodes = quad_.size();
  Eigen::MatrixXd kx(n, nodes);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < nodes; ++j) kx(i, j) = kernel_(x.row(i), quad_.nodes.row(j));
  Eigen::MatrixXd out = kx * weighted_;
  if (centered_) {
    // K-bar(x, x_j) = K(x, x_j) - m(x) - m(x_j) + c
    const double grand = quad_.weights.dot(node_row_mean_);
    const Eigen::RowVectorXd colsum = weighted_.colwise().sum();
    const Eigen::VectorXd mx = kx * quad_.weights;
    out -= (mx.array() - grand).matrix() * colsum;
    out.rowwise() -= offset_;
  }
  return out;
}

Eigen::VectorXd NystromMap::sup_norms() const { return node_values_.cwiseAbs().colwise().maxCoeff().transpose(); }

std::shared_ptr<const FeatureMap> NystromMap::truncated(Eigen::Index blocks) const {
  return std::make_shared<NystromMap>(kernel_, quad_, node_values_.leftCols(blocks), eigenvalues_.head(blocks),
                                      centered_);
}

SpectralBasis nystrom_decompose(const KernelFn& kernel, const Quadrature& quad, Eigen::Index K,
                                const NystromOptions& options) {
  quad.validate();
  const Eigen::Index n = quad.size();
  require(K >= 1, "nystrom_decompose: truncation must be >= 1");
  require(K <= n, "nystrom_decompose: truncation " + std::to_string(K) + " exceeds node count " + std::to_string(n));
  require(quad.weights.minCoeff() > 0.0, "nystrom_decompose: quadrature weights must be positive");

  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) gram(i, j) = kernel(quad.nodes.row(i), quad.nodes.row(j));
  const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
  const double asym = (gram - gram.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-10 * scale)) {
    throw ValidationError("nystrom_decompose: kernel is not symmetric on the nodes (max asymmetry " +
                          std::to_string(asym) + ")");
  }
  gram = 0.5 * (gram + gram.transpose()).eval();
  if (options.center) {
    const Eigen::VectorXd m = gram * quad.weights;
    const double c = quad.weights.dot(m);
    gram.colwise() -= m;
    gram.rowwise() -= m.transpose();
    gram.array() += c;
  }

  const Eigen::VectorXd sqrt_w = quad.weights.cwiseSqrt();
  const Eigen::MatrixXd weighted = sqrt_w.asDiagonal() * gram * sqrt_w.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(weighted);
  if (solver.info() != Eigen::Success) throw NumericError("nystrom_decompose: eigen solver failed");

  // Eigen returns ascending order.
  Eigen::VectorXd lambda = solver.eigenvalues().reverse().head(K);
  Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse().leftCols(K);
  const double floor = options.relative_floor * std::max(lambda(0), 0.0);
  for (Eigen::Index k = 0; k < K; ++k) {
    if (!(lambda(k) > floor) || lambda(k) <= 0.0) {
      throw NumericError("nystrom_decompose: eigenvalue <= numeric floor at k = " + std::to_string(k + 1) +
                         " (lambda = " + std::to_string(lambda(k)) + "); truncation too large for this quadrature");
    }
  }

  if (options.center) {
    // Exact eigenvectors of the centered operator are orthogonal to sqrt(w);
    // remove the solver's round-off component, which dominates for small lambda.
    vectors -= sqrt_w * (sqrt_w.transpose() * vectors);
    vectors.colwise().normalize();
  }
  Eigen::MatrixXd phi = sqrt_w.cwiseInverse().asDiagonal() * vectors;

  // Deterministic signs: nonnegative weighted inner product with a smoothed
  // indicator of the first node.
  Eigen::VectorXd reference(n);
  {
    double radius = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) radius = std::max(radius, (quad.nodes.row(i) - quad.nodes.row(0)).norm());
    const double h = radius > 0.0 ? 0.1 * radius : 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      reference(i) = std::exp(-(quad.nodes.row(i) - quad.nodes.row(0)).squaredNorm() / (2.0 * h * h));
    }
  }
  for (Eigen::Index k = 0; k < K; ++k) {
    const double inner = (quad.weights.array() * phi.col(k).array() * reference.array()).sum();
    double sign = inner >= 0.0 ? 1.0 : -1.0;
    if (std::abs(inner) <= 1e-12 * phi.col(k).cwiseAbs().maxCoeff()) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(phi(i, k)) > 1e-12) {
          sign = phi(i, k) > 0.0 ? 1.0 : -1.0;
          break;
        }
      }
    }
    phi.col(k) *= sign;
  }

  const Eigen::VectorXd means = phi.transpose() * quad.weights;
  const bool degenerate = options.center || means.cwiseAbs().maxCoeff() <= 1e-6;

  auto map = std::make_shared<NystromMap>(kernel, quad, phi, lambda, options.center);
  return SpectralBasis(lambda, std::move(map), quad.domain, degenerate, options.kernel_id);
}

KernelFn center_kernel(const KernelFn& kernel, const Quadrature& quad) {
  quad.validate();
  struct State {
    KernelFn kernel;
    Quadrature quad;
    double grand = 0.0;
    double row_mean(PointRef x) const {
      double m = 0.0;
      for (Eigen::Index i = 0; i < quad.size(); ++i) m += quad.weights(i) * kernel(x, quad.nodes.row(i));
      return m;
    }
  };
  auto state = std::make_shared<State>(State{kernel, quad, 0.0});
  for (Eigen::Index i = 0; i < quad.size(); ++i) state->grand += quad.weights(i) * state->row_mean(quad.nodes.row(i));
  return [state](PointRef x, PointRef y) {
    return state->kernel(x, y) - state->row_mean(x) - state->row_mean(y) + state->grand;
  };
}

Eigen::Index default_truncation(const Eigen::VectorXd& eigenvalues) {
  require(eigenvalues.size() >= 1 && eigenvalues(0) > 0.0, "default_truncation: need a positive leading eigenvalue");
  const Eigen::Index cap = std::min<Eigen::Index>(10'000, eigenvalues.size());
  for (Eigen::Index k = 0; k < cap; ++k) {
    if (eigenvalues(k) / eigenvalues(0) <= 1e-8) return k + 1;
  }
  return cap;
}

Eigen::Index default_node_count(Eigen::Index K) { return std::max<Eigen::Index>(4 * K, 256); }

// --- Evaluation ------------------------------------------------------------------------

double eval_truncated(const SpectralBasis& basis, PointRef x, PointRef y) {
  return basis.eigenvalues().dot(basis.map().pair_terms(x, y));
}

double moderated_eval(const ModeratedSpectrum& ms, PointRef x, PointRef y) {
  return ms.moderated_eigenvalues().dot(ms.basis().map().pair_terms(x, y));
}

// --- Analytic bases ----------------------------------------------------------------------

FunctionMap::FunctionMap(Evaluator evaluator, Eigen::VectorXd sup_norms)
    : evaluator_(std::move(evaluator)), sup_norms_(std::move(sup_norms)) {}

std::shared_ptr<const FeatureMap> FunctionMap::truncated(Eigen::Index blocks) const {
  return std::make_shared<FunctionMap>(evaluator_, sup_norms_.head(blocks));
}

double cosine_reference_kernel(double x, double y) { return 0.5 * (x * x + y * y) - std::max(x, y) + 1.0 / 3.0; }

SpectralBasis cosine_reference_basis(Eigen::Index K) {
  require(K >= 1, "cosine_reference_basis: K must be >= 1");
  constexpr double pi = std::numbers::pi;
  Eigen::VectorXd lambda(K);
  for (Eigen::Index k = 0; k < K; ++k) lambda(k) = 1.0 / ((k + 1) * pi * (k + 1) * pi);
  auto evaluator = [](const Points& x, Eigen::Index blocks) {
    Eigen::MatrixXd out(x.rows(), blocks);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      // cos((k+1) t) = 2 cos(t) cos(k t) - cos((k-1) t)
      const double c1 = std::cos(pi * x(i, 0));
      double prev = 1.0;
      double cur = c1;
      for (Eigen::Index k = 0; k < blocks; ++k) {
        out(i, k) = std::numbers::sqrt2 * cur;
        const double next = 2.0 * c1 * cur - prev;
        prev = cur;
        cur = next;
      }
    }
    return out;
  };
  auto map = std::make_shared<FunctionMap>(evaluator, Eigen::VectorXd::Constant(K, std::numbers::sqrt2));
  return SpectralBasis(lambda, std::move(map), Domain{Geometry::cube, 1}, true, "cosine", 1.0);
}

// --- Spectral summaries ----------------------------------------------------------------------

namespace {

double ls_slope(const Eigen::VectorXd& eigenvalues, Eigen::Index first, Eigen::Index last) {
  // 1-based indices k in [first, last]
  const Eigen::Index m = last - first + 1;
  Eigen::ArrayXd lx(m), ly(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    lx(j) = std::log(static_cast<double>(first + j));
    ly(j) = std::log(eigenvalues(first + j - 1));
  }
  const double mx = lx.mean();
  const double my = ly.mean();
  return ((lx - mx) * (ly - my)).sum() / (lx - mx).square().sum();
}

}  // namespace

DecayEstimate estimate_decay_exponent(const Eigen::VectorXd& eigenvalues) {
  const Eigen::Index K = eigenvalues.size();
  require(K >= 8, "estimate_decay_exponent: need at least 8 eigenvalues");
  const Eigen::Index first = (K + 3) / 4;
  for (Eigen::Index k = first; k <= K; ++k) {
    if (!(eigenvalues(k - 1) > 0.0)) {
      throw ValidationError("estimate_decay_exponent: non-positive eigenvalue at k = " + std::to_string(k));
    }
  }
  DecayEstimate est;
  est.s = -ls_slope(eigenvalues, first, K) / 2.0;
  const Eigen::Index mid = (first + K) / 2;
  if (mid - first >= 1 && K - mid >= 1) {
    const double lower = ls_slope(eigenvalues, first, mid);
    const double upper = ls_slope(eigenvalues, mid, K);
    if (lower < 0.0 && upper < 1.25 * lower) {
      est.super_polynomial = true;
      est.warning = "super-polynomial decay: local slope steepens from " + std::to_string(lower) + " to " +
                    std::to_string(upper) + " across the fitting window";
    }
  }
  return est;
}

double effective_variance(const ModeratedSpectrum& ms, TailModel tail) {
  const double retained =
      (ms.basis().multiplicities().array() * ms.moderated_eigenvalues().array().square()).sum();
  return tail == TailModel::power_law ? retained + effective_variance_tail(ms) : retained;
}

double effective_variance_tail(const ModeratedSpectrum& ms) {
  const double rho2 = ms.rho() * ms.rho();
  if (rho2 == 0.0) return std::numeric_limits<double>::infinity();
  const SpectralBasis& basis = ms.basis();
  const double K = static_cast<double>(basis.truncation());
  const double lambda_K = basis.eigenvalues()(basis.blocks() - 1);
  const double two_s = 2.0 * basis.decay_exponent();
  auto lambda_at = [&](double k) { return lambda_K * std::pow(K / k, two_s); };
  double sum = 0.0;
  double k = K + 1.0;
  constexpr double kDirectTerms = 1e6;
  for (; k <= K + kDirectTerms; k += 1.0) {
    const double l = lambda_at(k);
    const double t = l / (l + rho2);
    sum += t * t;
    if (l < 1e-6 * rho2 && t * t * k < 1e-16 * std::max(sum, 1e-300)) break;
  }
  // Remainder: moderated eigenvalue ~ lambda / rho^2, integrated.
  if (two_s * 2.0 > 1.0) {
    const double c = lambda_K * std::pow(K, two_s) / rho2;
    sum += c * c * std::pow(k, 1.0 - 2.0 * two_s) / (2.0 * two_s - 1.0);
  } else {
    return std::numeric_limits<double>::infinity();
  }
  return sum;
}

double eigenvalue_tail_mass(const SpectralBasis& basis) {
  const double two_s = 2.0 * basis.decay_exponent();
  if (two_s <= 1.0) return std::numeric_limits<double>::infinity();
  const double K = static_cast<double>(basis.truncation());
  const double lambda_K = basis.eigenvalues()(basis.blocks() - 1);
  // Midpoint-corrected integral of lambda_K (K/k)^{2s} over k > K.
  return lambda_K * std::pow(K, two_s) * std::pow(K + 0.5, 1.0 - two_s) / (two_s - 1.0);
}

}  // namespace gofkit
