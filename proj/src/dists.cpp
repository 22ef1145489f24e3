#include "gofkit/dists.hpp"
#include "gofkit/error.hpp"
#include "gofkit/quadrature.hpp"
#include "gofkit/special.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace gofkit {

namespace {

using special::normal_cdf;

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double mw_mass(const std::vector<NormalComponent>& comps) {
  double z = 0.0;
  for (const auto& c : comps) z += c.weight * (normal_cdf((3.0 - c.mean) / c.sd) - normal_cdf((-3.0 - c.mean) / c.sd));
  return z;
}

// Density of one Marron-Wand coordinate on [0, 1].
double mw_density_1d(const std::vector<NormalComponent>& comps, double z_mass, double x) {
  if (x < 0.0 || x > 1.0) return 0.0;
  const double y = 6.0 * x - 3.0;
  double f = 0.0;
  for (const auto& c : comps) f += c.weight * normal_pdf((y - c.mean) / c.sd) / c.sd;
  return 6.0 * f / z_mass;
}

// Mass of N(m, s^2) on [0, 1].
double unit_mass(double m, double s) { return normal_cdf((1.0 - m) / s) - normal_cdf(-m / s); }

double gm_component_1d(double m, double s, double x) { return normal_pdf((x - m) / s) / s / unit_mass(m, s); }

Eigen::RowVectorXd uniform_direction(int d, Rng& rng) {
  std::normal_distribution<double> z;
  Eigen::RowVectorXd v(d);
  do {
    for (int j = 0; j < d; ++j) v(j) = z(rng);
  } while (v.squaredNorm() == 0.0);
  return v.normalized();
}

// Wood's rejection sampler for vMF(e_d, kappa), then a reflection onto mu.
Eigen::RowVectorXd draw_vmf(const Eigen::VectorXd& mu, double kappa, Rng& rng, SamplerStats* stats) {
  const int d = static_cast<int>(mu.size());
  if (kappa == 0.0) return uniform_direction(d, rng);
  const double p1 = d - 1.0;
  const double b = p1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + p1 * p1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + p1 * std::log(1.0 - x0 * x0);
  std::gamma_distribution<double> g(p1 / 2.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double w = 0.0;
  for (;;) {
    if (stats) ++stats->proposals;
    const double g1 = g(rng);
    const double g2 = g(rng);
    const double z = g1 / (g1 + g2);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = u01(rng);
    if (kappa * w + p1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
  }
  if (stats) ++stats->accepted;
  Eigen::RowVectorXd y(d);
  if (d > 1) y.head(d - 1) = uniform_direction(d - 1, rng) * std::sqrt(std::max(0.0, 1.0 - w * w));
  y(d - 1) = w;
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(d);
  v(d - 1) = 1.0;
  v -= mu.transpose();
  const double vv = v.squaredNorm();
  if (vv > 1e-30) y -= (2.0 * y.dot(v) / vv) * v;
  return y;
}

// Watson via the symmetric vMF(+-mu, kappa) envelope: the target/envelope
// ratio exp(kappa t^2) / (2 cosh(kappa t)) never exceeds 1.
Eigen::RowVectorXd draw_watson(const Eigen::VectorXd& mu, double kappa, Rng& rng, SamplerStats* stats) {
  const int d = static_cast<int>(mu.size());
  if (kappa == 0.0) return uniform_direction(d, rng);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (;;) {
    if (stats) ++stats->proposals;
    Eigen::RowVectorXd y = draw_vmf(mu, kappa, rng, nullptr);
    if (u01(rng) < 0.5) y = -y;
    const double t = std::abs(y.dot(mu.transpose()));
    const double log_ratio = kappa * t * t - kappa * t - std::log1p(std::exp(-2.0 * kappa * t));
    if (std::log(u01(rng)) <= log_ratio) {
      if (stats) ++stats->accepted;
      return y;
    }
  }
}

Points draw_null(const Domain& domain, long m, Rng& rng) {
  Points out(m, domain.dim);
  if (domain.geometry == Geometry::cube) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (long i = 0; i < m; ++i)
      for (int j = 0; j < domain.dim; ++j) out(i, j) = u01(rng);
  } else {
    for (long i = 0; i < m; ++i) out.row(i) = uniform_direction(domain.dim, rng);
  }
  return out;
}

double spectral_bound(const AlternativeSpec& spec) {
  return spec.coefficients.cwiseAbs().dot(spec.basis->map().sup_norms().head(spec.coefficients.size()));
}

Points draw_spectral(const AlternativeSpec& spec, long m, Rng& rng, SamplerStats* stats) {
  const int d = spec.basis->domain().dim;
  const auto map = spec.basis->map().truncated(spec.coefficients.size());
  const double envelope = 1.0 + spectral_bound(spec);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Points out(m, d);
  long accepted = 0;
  while (accepted < m) {
    const long batch = 2 * (m - accepted) + 16;
    Points proposal(batch, d);
    for (long i = 0; i < batch; ++i)
      for (int j = 0; j < d; ++j) proposal(i, j) = u01(rng);
    const Eigen::VectorXd u = map->features(proposal) * spec.coefficients;
    for (long i = 0; i < batch && accepted < m; ++i) {
      if (stats) ++stats->proposals;
      const double target = 1.0 + u(i);
      if (target > envelope * (1.0 + 1e-12) || target < 0.0) {
        throw NumericError("spectral sampler: density 1 + u leaves [0, envelope]");
      }
      if (u01(rng) * envelope <= target) {
        out.row(accepted++) = proposal.row(i);
        if (stats) ++stats->accepted;
      }
    }
  }
  return out;
}

Points draw_family(const AlternativeSpec& spec, long m, Rng& rng, SamplerStats* stats) {
  const int d = spec.dim;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> z;
  switch (spec.family) {
    case Family::uniform_cube:
    case Family::uniform_sphere: return draw_null(spec.domain(), m, rng);
    case Family::gaussian_mixture: {
      Points out(m, d);
      std::discrete_distribution<int> pick(spec.component_weights.begin(), spec.component_weights.end());
      for (long i = 0; i < m; ++i) {
        const int c = pick(rng);
        for (int j = 0; j < d; ++j) {
          double x = 0.0;
          do {
            if (stats) ++stats->proposals;
            x = spec.means(c, j) + spec.scale * z(rng);
          } while (x < 0.0 || x > 1.0);
          if (stats) ++stats->accepted;
          out(i, j) = x;
        }
      }
      return out;
    }
    case Family::marron_wand: {
      const auto comps = marron_wand_components(spec.marron_wand);
      std::vector<double> w;
      for (const auto& c : comps) w.push_back(c.weight);
      std::discrete_distribution<int> pick(w.begin(), w.end());
      Points out(m, d);
      for (long i = 0; i < m; ++i) {
        for (int j = 0; j < d; ++j) {
          double y = 0.0;
          do {
            if (stats) ++stats->proposals;
            const auto& c = comps[static_cast<std::size_t>(pick(rng))];
            y = c.mean + c.sd * z(rng);
          } while (y < -3.0 || y > 3.0);
          if (stats) ++stats->accepted;
          out(i, j) = (y + 3.0) / 6.0;
        }
      }
      return out;
    }
    case Family::vmf:
    case Family::watson: {
      Points out(m, d);
      for (long i = 0; i < m; ++i)
        out.row(i) = spec.family == Family::vmf ? draw_vmf(spec.mu, spec.kappa, rng, stats)
                                                : draw_watson(spec.mu, spec.kappa, rng, stats);
      return out;
    }
    case Family::sphere_mixture: {
      Points out(m, d);
      std::discrete_distribution<int> pick(spec.component_weights.begin(), spec.component_weights.end());
      for (long i = 0; i < m; ++i) {
        const auto& c = spec.components[static_cast<std::size_t>(pick(rng))];
        out.row(i) = c.family == Family::vmf ? draw_vmf(c.mu, c.kappa, rng, stats) : draw_watson(c.mu, c.kappa, rng, stats);
      }
      return out;
    }
    case Family::spectral: return draw_spectral(spec, m, rng, stats);
  }
  throw ValidationError("sample: unsupported family");
}

// Density of the uncontaminated family.
double family_density(const AlternativeSpec& spec, PointRef x) {
  const Domain dom = spec.domain();
  if (dom.geometry == Geometry::cube && !dom.contains(x, 0.0)) return 0.0;
  switch (spec.family) {
    case Family::uniform_cube: return 1.0;
    case Family::uniform_sphere: return 1.0 / special::sphere_area(spec.dim);
    case Family::gaussian_mixture: {
      double total = 0.0;
      for (Eigen::Index c = 0; c < spec.means.rows(); ++c) {
        double prod = spec.component_weights[static_cast<std::size_t>(c)];
        for (int j = 0; j < spec.dim; ++j) prod *= gm_component_1d(spec.means(c, j), spec.scale, x(j));
        total += prod;
      }
      return total;
    }
    case Family::marron_wand: {
      const auto comps = marron_wand_components(spec.marron_wand);
      const double zm = mw_mass(comps);
      double prod = 1.0;
      for (int j = 0; j < spec.dim; ++j) prod *= mw_density_1d(comps, zm, x(j));
      return prod;
    }
    case Family::vmf: return std::exp(vmf_log_normalizer(spec.dim, spec.kappa) + spec.kappa * x.dot(spec.mu.transpose()));
    case Family::watson: {
      const double t = x.dot(spec.mu.transpose());
      return std::exp(watson_log_normalizer(spec.dim, spec.kappa) + spec.kappa * t * t);
    }
    case Family::sphere_mixture: {
      double total = 0.0;
      for (std::size_t c = 0; c < spec.components.size(); ++c)
        total += spec.component_weights[c] * family_density(spec.components[c], x);
      return total;
    }
    case Family::spectral: {
      Points p = x;
      return 1.0 + (spec.basis->map().truncated(spec.coefficients.size())->features(p) * spec.coefficients)(0);
    }
  }
  return 0.0;
}

// E_0[(dP/dP0)^2] - 1 for the uncontaminated family on N nodes.
double family_chi_square(const AlternativeSpec& spec, int nodes) {
  switch (spec.family) {
    case Family::uniform_cube:
    case Family::uniform_sphere: return 0.0;
    case Family::marron_wand: {
      const auto comps = marron_wand_components(spec.marron_wand);
      const double zm = mw_mass(comps);
      const Quadrature q = uniform_interval_quadrature(nodes);
      double s = 0.0;
      for (Eigen::Index i = 0; i < q.size(); ++i) {
        const double f = mw_density_1d(comps, zm, q.nodes(i, 0));
        s += q.weights(i) * f * f;
      }
      return std::pow(s, spec.dim) - 1.0;
    }
    case Family::gaussian_mixture: {
      const Quadrature q = uniform_interval_quadrature(nodes);
      const Eigen::Index k = spec.means.rows();
      double total = 0.0;
      for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) {
          double prod = spec.component_weights[static_cast<std::size_t>(a)] * spec.component_weights[static_cast<std::size_t>(b)];
          for (int j = 0; j < spec.dim; ++j) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < q.size(); ++i) {
              const double x = q.nodes(i, 0);
              s += q.weights(i) * gm_component_1d(spec.means(a, j), spec.scale, x) *
                   gm_component_1d(spec.means(b, j), spec.scale, x);
            }
            prod *= s;
          }
          total += prod;
        }
      }
      return total - 1.0;
    }
    case Family::vmf:
    case Family::watson: {
      // t = mu^T x has density proportional to (1 - t^2)^{(d-3)/2} under P0.
      // The integrand is entire in t, so a few hundred nodes are exact to
      // rounding.
      const int n = std::min(nodes, 256);
      const double ab = (spec.dim - 3) / 2.0;
      const GaussRule<double> rule = gauss_jacobi<double>(n, ab, ab);
      const double base = std::log(special::sphere_area(spec.dim)) +
                          (spec.family == Family::vmf ? vmf_log_normalizer(spec.dim, spec.kappa)
                                                      : watson_log_normalizer(spec.dim, spec.kappa));
      double s = 0.0;
      for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
        const double t = rule.nodes(i);
        const double expo = spec.family == Family::vmf ? spec.kappa * t : spec.kappa * t * t;
        s += rule.weights(i) * std::exp(2.0 * (base + expo));
      }
      return s / rule.weights.sum() - 1.0;
    }
    case Family::sphere_mixture: {
      // vMF components have a closed form: E_0[r_a r_b] = area C_a C_b / C(|k_a mu_a + k_b mu_b|).
      for (const auto& c : spec.components) {
        if (c.family != Family::vmf) throw ValidationError("chi-square: no quadrature path for watson mixtures");
      }
      const int d = spec.dim;
      const double log_area = std::log(special::sphere_area(d));
      double total = 0.0;
      for (std::size_t a = 0; a < spec.components.size(); ++a) {
        for (std::size_t b = 0; b < spec.components.size(); ++b) {
          const auto& ca = spec.components[a];
          const auto& cb = spec.components[b];
          const double joint = (ca.kappa * ca.mu + cb.kappa * cb.mu).norm();
          total += spec.component_weights[a] * spec.component_weights[b] *
                   std::exp(log_area + vmf_log_normalizer(d, ca.kappa) + vmf_log_normalizer(d, cb.kappa) -
                            vmf_log_normalizer(d, joint));
        }
      }
      return total - 1.0;
    }
    case Family::spectral: {
      require(spec.basis->domain().dim == 1, "chi-square quadrature: spectral specs only on [0, 1]");
      const Quadrature q = uniform_interval_quadrature(nodes);
      const Eigen::VectorXd u = spec.basis->map().truncated(spec.coefficients.size())->features(q.nodes) * spec.coefficients;
      return q.weights.dot(u.cwiseAbs2());
    }
  }
  throw ValidationError("chi-square: unsupported family");
}

}  // namespace

Sample sample(const AlternativeSpec& spec, long n, Rng& rng, SamplerStats* stats) {
  require(n >= 1, "sample: n must be >= 1");
  spec.validate();
  const Domain dom = spec.domain();
  if (spec.weight >= 1.0) return Sample(draw_family(spec, n, rng, stats), dom);

  std::bernoulli_distribution from_family(spec.weight);
  std::vector<char> flags(static_cast<std::size_t>(n));
  long m = 0;
  for (auto& f : flags) m += (f = from_family(rng) ? 1 : 0);
  const Points alt = m > 0 ? draw_family(spec, m, rng, stats) : Points(0, dom.dim);
  const Points null = n - m > 0 ? draw_null(dom, n - m, rng) : Points(0, dom.dim);
  Points out(n, dom.dim);
  long ia = 0, in = 0;
  for (long i = 0; i < n; ++i) out.row(i) = flags[static_cast<std::size_t>(i)] ? alt.row(ia++) : null.row(in++);
  return Sample(std::move(out), dom);
}

Sample sample(const AlternativeSpec& spec, long n, std::uint64_t seed, SamplerStats* stats) {
  Rng rng = make_rng(seed, {});
  return sample(spec, n, rng, stats);
}

double density(const AlternativeSpec& spec, PointRef x) {
  spec.validate();
  const Domain dom = spec.domain();
  require(x.size() == dom.dim, "density: point dimension mismatch");
  const double f = family_density(spec, x);
  if (spec.weight >= 1.0) return f;
  double p0 = 1.0 / (dom.geometry == Geometry::cube ? 1.0 : special::sphere_area(dom.dim));
  if (dom.geometry == Geometry::cube && !dom.contains(x, 0.0)) p0 = 0.0;
  return (1.0 - spec.weight) * p0 + spec.weight * f;
}

double vmf_log_normalizer(int d, double kappa) {
  require(d >= 2 && kappa >= 0.0, "vmf_log_normalizer: need d >= 2, kappa >= 0");
  if (kappa == 0.0) return -std::log(special::sphere_area(d));
  const double nu = d / 2.0 - 1.0;
  return nu * std::log(kappa) - (d / 2.0) * std::log(2.0 * std::numbers::pi) - special::log_bessel_i(nu, kappa);
}

double watson_log_normalizer(int d, double kappa) {
  require(d >= 2 && kappa >= 0.0, "watson_log_normalizer: need d >= 2, kappa >= 0");
  return std::lgamma(d / 2.0) - std::log(2.0) - (d / 2.0) * std::log(std::numbers::pi) -
         special::log_kummer_m(0.5, d / 2.0, kappa);
}

DivergenceEstimate chi_square_divergence_quadrature(const AlternativeSpec& spec, int nodes) {
  require(nodes >= 16, "chi-square quadrature: need at least 16 nodes");
  spec.validate();
  const double w2 = spec.weight * spec.weight;
  const double full = family_chi_square(spec, nodes);
  const double half = family_chi_square(spec, nodes / 2);
  return {w2 * full, w2 * std::abs(full - half)};
}

DivergenceEstimate chi_square_divergence(const AlternativeSpec& spec, const std::string& null_id) {
  spec.validate();
  require(Domain::parse(null_id) == spec.domain(),
          "chi-square: spec lives on " + spec.domain().id() + ", not on " + null_id);
  if (spec.family == Family::spectral) {
    return {spec.weight * spec.weight * spec.coefficients.squaredNorm(), 0.0};
  }
  if (spec.family == Family::uniform_cube || spec.family == Family::uniform_sphere) return {0.0, 0.0};
  return chi_square_divergence_quadrature(spec);
}

InterpolationDiagnostic interpolation_radius(const Eigen::VectorXd& a, const Eigen::VectorXd& eigenvalues,
                                             double theta, bool use_proof_variant) {
  require(theta > 0.0, "interpolation_radius: theta must be > 0");
  require(a.size() >= 1, "interpolation_radius: empty coefficient vector");
  require(eigenvalues.size() >= a.size(), "interpolation_radius: fewer eigenvalues than coefficients");
  require((eigenvalues.head(a.size()).array() > 0.0).all(), "interpolation_radius: eigenvalues must be positive");
  const Eigen::Index L = a.size();
  const Eigen::ArrayXd a2 = a.array().square();
  const Eigen::ArrayXd ratio = a2 / eigenvalues.head(L).array();

  // head(K) = sum_{k<=K} a^2/lambda, tail(K) = sum_{k>=K} a^2, 1-based K.
  Eigen::ArrayXd head(L + 1), tail(L + 2);
  head(0) = 0.0;
  for (Eigen::Index k = 1; k <= L; ++k) head(k) = head(k - 1) + ratio(k - 1);
  tail(L + 1) = 0.0;
  for (Eigen::Index k = L; k >= 1; --k) tail(k) = tail(k + 1) + a2(k - 1);

  InterpolationDiagnostic out;
  out.theta = theta;
  out.use_proof_variant = use_proof_variant;
  out.trace_literal.resize(L);
  out.trace_proof.resize(L);
  for (Eigen::Index K = 1; K <= L; ++K) out.trace_literal(K - 1) = std::pow(head(K), 2.0 / theta) * tail(K);
  for (Eigen::Index K = 0; K < L; ++K) out.trace_proof(K) = std::pow(head(K + 1), 1.0 / theta) * tail(K + 1);
  out.m_literal = std::sqrt(out.trace_literal.maxCoeff());
  out.m_proof = std::sqrt(out.trace_proof.maxCoeff());
  return out;
}

Eigen::Index least_favorable_frequencies(double delta, double s, double theta, double C) {
  require(delta > 0.0 && s > 0.0 && theta >= 0.0 && C > 0.0, "least_favorable: need delta, s, C > 0 and theta >= 0");
  // Guard against floor() dropping an exact integer through rounding.
  const double K = std::floor(C * std::pow(delta, -(theta + 1.0) / (2.0 * s)) * (1.0 + 1e-12));
  require(K >= 1.0, "least_favorable: delta too large for a single frequency");
  require(K < 1e9, "least_favorable: frequency count overflows");
  return static_cast<Eigen::Index>(K);
}

AlternativeSpec least_favorable(std::shared_ptr<const SpectralBasis> basis, long n, double s, double theta,
                                double delta, std::uint64_t seed, const LeastFavorableOptions& options) {
  require(basis != nullptr, "least_favorable: null basis");
  require(basis->map().has_explicit_features(), "least_favorable: basis needs explicit eigenfunctions");
  require(n >= 1, "least_favorable: n must be >= 1");
  AlternativeSpec spec;
  spec.family = Family::spectral;
  spec.dim = basis->domain().dim;
  spec.basis_id = basis->kernel_id();
  if (options.single_frequency) {
    require(s > 0.0 && delta > 0.0 && options.C2 > 0.0, "least_favorable: need s, delta, C2 > 0");
    const auto k = static_cast<Eigen::Index>(
        std::floor(options.C2 * std::pow(static_cast<double>(n), 1.0 / (4.0 * s)) * (1.0 + 1e-12)));
    require(k >= 1, "least_favorable: single frequency index k_n < 1");
    require(k <= basis->blocks(), "least_favorable: k_n = " + std::to_string(k) + " exceeds the basis");
    spec.coefficients = Eigen::VectorXd::Zero(k);
    spec.coefficients(k - 1) = std::sqrt(delta);
  } else {
    const Eigen::Index K = least_favorable_frequencies(delta, s, theta, options.C);
    require(K <= basis->blocks(), "least_favorable: K = " + std::to_string(K) + " exceeds the basis");
    Rng rng = make_rng(seed, {hash_label("least-favorable")});
    std::bernoulli_distribution sign(0.5);
    const double amp = std::sqrt(delta / static_cast<double>(K));
    spec.coefficients.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) spec.coefficients(k) = sign(rng) ? amp : -amp;
  }
  spec.basis = std::move(basis);
  spec.validate();
  return spec;
}

}  // namespace gofkit
