#pragma once

#include "gofkit/quadrature.hpp"
#include "gofkit/types.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gofkit {

/// Per-sample sufficient statistics of a basis. A block groups eigenfunctions
/// sharing one eigenvalue (a single eigenfunction for Nystrom and tensor
/// bases, a full harmonic degree on the sphere).
struct SampleMoments {
  Eigen::VectorXd mean_sq;  // sum_{j in block} (n^-1 sum_i phi_j(X_i))^2
  Eigen::VectorXd diag;     // n^-1 sum_i sum_{j in block} phi_j(X_i)^2
  Eigen::Index n = 0;
};

/// Evaluates the eigenfunctions of a basis. Implementations are immutable.
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;

  virtual Eigen::Index block_count() const = 0;

  /// True when every block is a single eigenfunction that can be evaluated
  /// pointwise through `features`.
  virtual bool has_explicit_features() const { return false; }

  /// n x block_count matrix [phi_k(x_i)]. Only for explicit maps.
  virtual Eigen::MatrixXd features(const Points& x) const;

  virtual SampleMoments moments(const Points& x) const;

  /// Per-block kernel contributions G_b(x, y) = sum_{j in b} phi_j(x) phi_j(y).
  virtual Eigen::VectorXd pair_terms(PointRef x, PointRef y) const;

  /// Per-block bound on sup_x |phi_j(x)| (observed, not proven).
  virtual Eigen::VectorXd sup_norms() const = 0;

  /// Same map restricted to the leading `blocks` blocks.
  virtual std::shared_ptr<const FeatureMap> truncated(Eigen::Index blocks) const = 0;
};

/// Eigenvalues and eigenfunctions of a Mercer kernel relative to P0.
class SpectralBasis {
 public:
  SpectralBasis(Eigen::VectorXd eigenvalues, Eigen::VectorXd multiplicities,
                std::shared_ptr<const FeatureMap> map, Domain domain, bool degenerate,
                std::string kernel_id = {}, std::optional<double> decay_exponent = {});

  /// Blocks have multiplicity one.
  SpectralBasis(Eigen::VectorXd eigenvalues, std::shared_ptr<const FeatureMap> map, Domain domain,
                bool degenerate, std::string kernel_id = {}, std::optional<double> decay_exponent = {});

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::VectorXd& multiplicities() const { return multiplicities_; }
  Eigen::Index blocks() const { return eigenvalues_.size(); }
  /// Number of eigenfunctions retained (sum of multiplicities).
  Eigen::Index truncation() const;
  /// Eigenvalues repeated by multiplicity.
  Eigen::VectorXd expanded_eigenvalues() const;

  double decay_exponent() const { return decay_; }
  bool degenerate() const { return degenerate_; }
  const Domain& domain() const { return domain_; }
  std::string null_id() const { return domain_.id(); }
  const std::string& kernel_id() const { return kernel_id_; }

  const FeatureMap& map() const { return *map_; }
  std::shared_ptr<const FeatureMap> shared_map() const { return map_; }

  SampleMoments moments(const Sample& sample) const;
  Eigen::MatrixXd features(const Points& x) const { return map_->features(x); }

  SpectralBasis truncated(Eigen::Index blocks) const;
  /// Eigenvalues multiplied by c > 0; eigenfunctions unchanged.
  SpectralBasis scaled(double c) const;
  SpectralBasis with_decay_exponent(double s) const;

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::VectorXd multiplicities_;
  std::shared_ptr<const FeatureMap> map_;
  Domain domain_;
  bool degenerate_ = false;
  std::string kernel_id_;
  double decay_ = 1.0;
};

/// A basis paired with the moderation parameter rho; exposes
/// lambda_k / (lambda_k + rho^2).
class ModeratedSpectrum {
 public:
  ModeratedSpectrum(SpectralBasis basis, double rho);

  const SpectralBasis& basis() const { return basis_; }
  double rho() const { return rho_; }
  const Eigen::VectorXd& moderated_eigenvalues() const { return moderated_; }

 private:
  SpectralBasis basis_;
  double rho_;
  Eigen::VectorXd moderated_;
};

/// lambda / (lambda + rho^2), elementwise.
template <typename Derived>
auto moderate(const Eigen::ArrayBase<Derived>& eigenvalues, typename Derived::Scalar rho) {
  return eigenvalues / (eigenvalues + rho * rho);
}

// --- Nystrom ------------------------------------------------------------------

struct NystromOptions {
  /// Decompose K-bar (the kernel centered under the quadrature) instead of K.
  bool center = false;
  /// Relative floor: eigenvalues at or below floor * lambda_1 are rejected.
  double relative_floor = 1e-12;
  std::string kernel_id;
};

/// Explicit eigenfunctions extended off-node by the Nystrom formula
/// phi_k(x) = lambda_k^-1 sum_i w_i K(x, x_i) phi_k(x_i).
class NystromMap final : public FeatureMap {
 public:
  NystromMap(KernelFn kernel, Quadrature quad, Eigen::MatrixXd node_values, Eigen::VectorXd eigenvalues,
             bool centered);

  Eigen::Index block_count() const override { return eigenvalues_.size(); }
  bool has_explicit_features() const override { return true; }
  Eigen::MatrixXd features(const Points& x) const override;
  Eigen::VectorXd sup_norms() const override;
  std::shared_ptr<const FeatureMap> truncated(Eigen::Index blocks) const override;

  const Quadrature& quadrature() const { return quad_; }
  /// N x K matrix phi_k(x_i) at the quadrature nodes.
  const Eigen::MatrixXd& node_values() const { return node_values_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  bool centered() const { return centered_; }

 private:
  KernelFn kernel_;
  Quadrature quad_;
  Eigen::MatrixXd node_values_;
  Eigen::VectorXd eigenvalues_;
  bool centered_;
  Eigen::MatrixXd weighted_;      // W * node_values * Lambda^-1
  Eigen::RowVectorXd offset_;     // centering correction per eigenfunction
  Eigen::VectorXd node_row_mean_; // sum_j w_j K(x_i, x_j), only when centered
};

/// Top-K eigenpairs of [sqrt(w_i w_j) K(x_i, x_j)] with the Nystrom extension.
/// Signs are fixed so that sum_i w_i phi_k(x_i) r(x_i) >= 0 for the reference
/// r(x) = exp(-|x - x_1|^2 / (2 h^2)), h = 0.1 * max_i |x_i - x_1|.
/// Throws ValidationError for a non-symmetric Gram matrix or K > N and
/// NumericError when lambda_K falls to the numeric floor.
SpectralBasis nystrom_decompose(const KernelFn& kernel, const Quadrature& quad, Eigen::Index K,
                                const NystromOptions& options = {});

/// K-bar(x, y) = K(x, y) - E K(x, .) - E K(., y) + E E K under the quadrature.
KernelFn center_kernel(const KernelFn& kernel, const Quadrature& quad);

/// Smallest K with lambda_K / lambda_1 <= 1e-8, capped at 10^4 (and at the
/// number of eigenvalues supplied).
Eigen::Index default_truncation(const Eigen::VectorXd& eigenvalues);

/// max(4K, 256).
Eigen::Index default_node_count(Eigen::Index K);

// --- Evaluation ---------------------------------------------------------------

/// sum_k lambda_k phi_k(x) phi_k(y).
double eval_truncated(const SpectralBasis& basis, PointRef x, PointRef y);

/// sum_k [lambda_k / (lambda_k + rho^2)] phi_k(x) phi_k(y).
double moderated_eval(const ModeratedSpectrum& ms, PointRef x, PointRef y);

// --- Structured spectra ---------------------------------------------------------

/// Explicit basis built from eigenvalues and a feature callback; used for
/// analytic spectra.
class FunctionMap final : public FeatureMap {
 public:
  using Evaluator = std::function<Eigen::MatrixXd(const Points&, Eigen::Index)>;
  FunctionMap(Evaluator evaluator, Eigen::VectorXd sup_norms);

  Eigen::Index block_count() const override { return sup_norms_.size(); }
  bool has_explicit_features() const override { return true; }
  Eigen::MatrixXd features(const Points& x) const override { return evaluator_(x, block_count()); }
  Eigen::VectorXd sup_norms() const override { return sup_norms_; }
  std::shared_ptr<const FeatureMap> truncated(Eigen::Index blocks) const override;

 private:
  Evaluator evaluator_;
  Eigen::VectorXd sup_norms_;
};

/// Closed-form basis of the cosine reference kernel
/// K(x,y) = sum_k 2 cos(k pi x) cos(k pi y) / (k pi)^2 = (x^2+y^2)/2 - max(x,y) + 1/3
/// under Uniform[0,1]: lambda_k = (k pi)^-2, phi_k = sqrt(2) cos(k pi x).
SpectralBasis cosine_reference_basis(Eigen::Index K);

/// The cosine reference kernel in closed form.
double cosine_reference_kernel(double x, double y);

struct TensorOptions {
  /// Eigenvalue attached to the constant eigenfunction of each coordinate
  /// when the factor basis is degenerate.
  double constant_eigenvalue = 1.0;
  /// Maximum number of lattice points held in the search frontier.
  std::size_t frontier_budget = 5'000'000;
};

/// Eigenfunctions phi_{k_1}(x_1) ... phi_{k_d}(x_d) indexed by a multi-index
/// (0 = constant mode of that coordinate).
class TensorMap final : public FeatureMap {
 public:
  TensorMap(std::shared_ptr<const FeatureMap> factor, Eigen::MatrixXi multi_indices);

  Eigen::Index block_count() const override { return multi_indices_.rows(); }
  bool has_explicit_features() const override { return true; }
  Eigen::MatrixXd features(const Points& x) const override;
  Eigen::VectorXd sup_norms() const override;
  std::shared_ptr<const FeatureMap> truncated(Eigen::Index blocks) const override;

  const Eigen::MatrixXi& multi_indices() const { return multi_indices_; }
  const FeatureMap& factor() const { return *factor_; }

 private:
  std::shared_ptr<const FeatureMap> factor_;
  Eigen::MatrixXi multi_indices_;  // K x d
};

/// The K largest products lambda_{k_1} ... lambda_{k_d} found by best-first
/// search on the multi-index lattice; the all-constant index is excluded.
SpectralBasis tensor_product_basis(const SpectralBasis& factor, int d, Eigen::Index K,
                                   const TensorOptions& options = {});

/// Multi-index eigenvalue ordering shared by the search and its tests:
/// larger product first, ties broken lexicographically on the index.
struct TensorCandidate {
  double value;
  std::vector<int> index;
  friend bool operator<(const TensorCandidate& a, const TensorCandidate& b) {
    if (a.value != b.value) return a.value < b.value;
    return a.index > b.index;
  }
};

/// Zonal kernel g(<x, y>) on S^{d-1}: per-degree eigenvalues under the
/// uniform measure (degree 0 included, zeros kept).
struct ZonalSpectrum {
  int d = 3;
  Eigen::VectorXd degree_eigenvalues;  // index = degree
  Eigen::VectorXd multiplicities;      // N(d, k)
  int quadrature_nodes = 0;
};

/// Funk-Hecke eigenvalues lambda_k = c_d int g(t) P_k(t) (1-t^2)^{(d-3)/2} dt
/// with Gauss-Jacobi quadrature, doubled until successive rules agree to
/// 1e-13. Throws NumericError when no rule up to 8192 nodes converges.
ZonalSpectrum sphere_zonal_spectrum(const std::function<double(double)>& g, int d, int degree_max);

/// Degenerate basis over harmonic degrees k >= 1 whose eigenvalue exceeds
/// 1e-12 of the largest (smaller ones are quadrature noise).
/// Evaluation routes through the addition theorem
/// sum_{deg-k harmonics} Y(x)Y(y) = N(d,k) P_k(<x,y>).
SpectralBasis sphere_basis(const ZonalSpectrum& spectrum, std::string kernel_id = {});

/// Kernel reconstruction sum_k lambda_k N(d,k) P_k(t), degree 0 included.
double zonal_eval(const ZonalSpectrum& spectrum, double t);

class ZonalMap final : public FeatureMap {
 public:
  ZonalMap(int d, std::vector<int> degrees);

  Eigen::Index block_count() const override { return static_cast<Eigen::Index>(degrees_.size()); }
  SampleMoments moments(const Points& x) const override;
  Eigen::VectorXd pair_terms(PointRef x, PointRef y) const override;
  Eigen::VectorXd sup_norms() const override;
  std::shared_ptr<const FeatureMap> truncated(Eigen::Index blocks) const override;

  int dim() const { return d_; }
  const std::vector<int>& degrees() const { return degrees_; }

 private:
  int d_;
  std::vector<int> degrees_;
  Eigen::VectorXd multiplicity_;
};

// --- Spectral summaries -------------------------------------------------------------

struct DecayEstimate {
  double s = 0.0;
  /// Set when the local slope over the upper half of the fitting window is
  /// markedly steeper than over the lower half.
  bool super_polynomial = false;
  std::string warning;
};

/// s = -slope / 2 from least squares of log lambda_k on log k over
/// k in [ceil(K/4), K]. Needs at least 8 eigenvalues.
DecayEstimate estimate_decay_exponent(const Eigen::VectorXd& eigenvalues);

enum class TailModel { none, power_law };

/// v = sum_k (lambda_k / (lambda_k + rho^2))^2 over the retained spectrum,
/// counting multiplicity. With TailModel::power_law, adds the integral of
/// the squared moderated power-law tail lambda(k) = lambda_K (K/k)^{2s}.
double effective_variance(const ModeratedSpectrum& ms, TailModel tail = TailModel::none);

/// Power-law estimate of the part of v beyond the truncation (the amount
/// TailModel::power_law adds).
double effective_variance_tail(const ModeratedSpectrum& ms);

/// Power-law estimate of sum_{k > K} lambda_k, the eigenvalue mass dropped by
/// truncation; +inf when the decay exponent is at most 1/2.
double eigenvalue_tail_mass(const SpectralBasis& basis);

}  // namespace gofkit
