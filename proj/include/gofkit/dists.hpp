#pragma once

#include "gofkit/rng.hpp"
#include "gofkit/spectrum.hpp"
#include "gofkit/types.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gofkit {

enum class Family {
  uniform_cube,
  gaussian_mixture,
  marron_wand,
  uniform_sphere,
  vmf,
  watson,
  sphere_mixture,
  spectral,
};

std::string to_string(Family family);

/// Named 1-D normal mixtures on [-3, 3], mapped affinely to [0, 1].
enum class MarronWand { skewed_unimodal, asymmetric_claw, smooth_comb };

std::string to_string(MarronWand density);
MarronWand parse_marron_wand(std::string_view name);

struct NormalComponent {
  double weight;
  double mean;
  double sd;
};

/// Mixture components of a Marron-Wand density before truncation.
std::vector<NormalComponent> marron_wand_components(MarronWand density);

/// Declarative description of a distribution on the cube or sphere.
///
/// `weight` < 1 contaminates the null: P = (1 - w) P0 + w P_family, so the
/// density ratio u scales by w and chi-square by w^2.
struct AlternativeSpec {
  Family family = Family::uniform_cube;
  int dim = 1;
  double weight = 1.0;

  // gaussian-mixture: rows of `means` are component centres in [0, 1]^d;
  // every component is isotropic with sd `scale` and truncated to the cube.
  std::vector<double> component_weights;
  Eigen::MatrixXd means;
  double scale = 0.05;

  // marron-wand: product of the named density over coordinates.
  MarronWand marron_wand = MarronWand::skewed_unimodal;

  // vmf / watson: unit mean direction and concentration.
  Eigen::VectorXd mu;
  double kappa = 0.0;

  // sphere-mixture: vmf or watson components (weights in component_weights).
  std::vector<AlternativeSpec> components;

  // spectral: density 1 + sum_k a_k phi_k over an explicit basis.
  std::shared_ptr<const SpectralBasis> basis;
  Eigen::VectorXd coefficients;
  std::string basis_id;

  Domain domain() const;
  /// Throws ValidationError when an invariant fails.
  void validate() const;
  /// `family:key=val,...`; parse(str()) describes the same distribution
  /// (spectral specs name their basis by `basis_id`).
  std::string str() const;

  /// Parses `family:key=val,...`; vector values are `;`-separated.
  ///   uniform-cube:d=D            uniform-sphere:d=D
  ///   gaussian-mixture:d=D,k=5,scale=0.05,seed=S   (random means in [0.2,0.8]^d)
  ///   gaussian-mixture:d=D,means=m11;..;mkd[,weights=..][,scale=..]
  ///   marron-wand:skewed-unimodal:d=D   (also asymmetric-claw, smooth-comb)
  ///   vmf:d=D,kappa=K[,mu=..]     watson:d=D,kappa=K[,mu=..]  (mu defaults to e_d)
  ///   sphere-mixture:d=D,family=vmf,kappa=K,k=3,seed=S[,mu=..]
  ///   sphere-mixture:d=D,kappas=K1;K2,seed=S   (k follows the kappas list)
  ///   spectral:a=a1;a2;..[,basis=cosine-analytic]
  /// Every family accepts weight=W in (0, 1].
  static AlternativeSpec parse(std::string_view text);

  static AlternativeSpec null_of(const Domain& domain);
};

/// Resolves the basis named by a spectral spec. The default resolver knows
/// `cosine-analytic` (closed-form cosine basis of the needed length).
using BasisResolver = std::function<std::shared_ptr<const SpectralBasis>(const std::string& id, Eigen::Index K)>;
void set_basis_resolver(BasisResolver resolver);

struct SamplerStats {
  long proposals = 0;
  long accepted = 0;
};

/// n i.i.d. draws. The Rng overload consumes `rng`; the seed overload uses
/// the stream derive_seed(seed, {}).
Sample sample(const AlternativeSpec& spec, long n, Rng& rng, SamplerStats* stats = nullptr);
Sample sample(const AlternativeSpec& spec, long n, std::uint64_t seed, SamplerStats* stats = nullptr);

/// Density with respect to Lebesgue measure on the cube or surface measure
/// on the sphere.
double density(const AlternativeSpec& spec, PointRef x);

/// Log normalizing constants with respect to surface measure on S^{d-1}.
double vmf_log_normalizer(int d, double kappa);
double watson_log_normalizer(int d, double kappa);

struct DivergenceEstimate {
  double value = 0.0;
  double error = 0.0;  // |Q_N - Q_{N/2}| for quadrature paths, 0 when exact
};

/// chi^2(P, P0) = int (dP/dP0)^2 dP0 - 1. Parseval for spectral specs;
/// Gauss-Legendre (tensorized over components) on the cube; Gauss-Jacobi in
/// mu^T x for vmf and watson. Throws ValidationError when there is no path.
DivergenceEstimate chi_square_divergence(const AlternativeSpec& spec, const std::string& null_id);

/// Quadrature path only, bypassing Parseval (used to cross-check it).
DivergenceEstimate chi_square_divergence_quadrature(const AlternativeSpec& spec, int nodes = 2048);

/// Sufficient-condition radius for u = sum a_k phi_k in F(theta; M).
///   literal:  M^2 = max_{K>=1} (sum_{k<=K} a_k^2/lambda_k)^{2/theta} sum_{k>=K} a_k^2
///   proof:    M^2 = max_{K>=0} (sum_{k<=K+1} a_k^2/lambda_k)^{1/theta} sum_{k>=K+1} a_k^2
/// The proof variant bounds sup ||u - f_R||^2 R^{2/theta} over
/// R^2 in [l_K^2, l_{K+1}^2], with l_K^2 the head sum.
struct InterpolationDiagnostic {
  double theta = 0.0;
  double m_literal = 0.0;
  double m_proof = 0.0;
  Eigen::VectorXd trace_literal;  // M^2 bound at K = 1..len
  Eigen::VectorXd trace_proof;    // M^2 bound at K = 0..len-1
  bool use_proof_variant = false;
  double radius() const { return use_proof_variant ? m_proof : m_literal; }
};

InterpolationDiagnostic interpolation_radius(const Eigen::VectorXd& a, const Eigen::VectorXd& eigenvalues,
                                             double theta, bool use_proof_variant = false);

struct LeastFavorableOptions {
  double C = 1.0;             // C_8 (theta = 0) or C_10 (theta > 0)
  bool single_frequency = false;
  double C2 = 1.0;            // single-frequency k_n = floor(C2 n^{1/(4s)})
};

/// Spectral alternative with chi-square divergence exactly delta:
/// coefficients a xi_k on frequencies 1..K, K = floor(C delta^{-(theta+1)/(2s)}),
/// a = sqrt(delta/K), xi_k seeded random signs; or sqrt(delta) on the
/// single frequency k_n. Throws ValidationError when 1 + u can go negative.
AlternativeSpec least_favorable(std::shared_ptr<const SpectralBasis> basis, long n, double s, double theta,
                                double delta, std::uint64_t seed, const LeastFavorableOptions& options = {});

/// K_n of the multi-frequency construction.
Eigen::Index least_favorable_frequencies(double delta, double s, double theta, double C);

}  // namespace gofkit
