#include "gofkit/error.hpp"
#include "gofkit/special.hpp"
#include "gofkit/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gofkit {

namespace {

Eigen::VectorXd funk_hecke(const std::function<double(double)>& g, int d, int degree_max, int nodes) {
  const double a = (d - 3) / 2.0;
  const double nu = (d - 2) / 2.0;
  const auto rule = gauss_jacobi<double>(nodes, a, a);
  const double total = rule.weights.sum();
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(degree_max + 1);
  Eigen::VectorXd p;
  for (int i = 0; i < nodes; ++i) {
    const double t = rule.nodes(i);
    special::gegenbauer_normalized(degree_max, nu, t, p);
    lambda += (rule.weights(i) * g(t) / total) * p;
  }
  return lambda;
}

}  // namespace

ZonalSpectrum sphere_zonal_spectrum(const std::function<double(double)>& g, int d, int degree_max) {
  require(d >= 3, "sphere_zonal_spectrum: ambient dimension must be >= 3");
  require(degree_max >= 0, "sphere_zonal_spectrum: degree_max must be >= 0");
  int nodes = std::max(32, 2 * degree_max + 8);
  Eigen::VectorXd previous = funk_hecke(g, d, degree_max, nodes);
  for (; nodes <= 8192; nodes *= 2) {
    Eigen::VectorXd current = funk_hecke(g, d, degree_max, 2 * nodes);
    const double scale = std::max(1e-300, current.cwiseAbs().maxCoeff());
    if ((current - previous).cwiseAbs().maxCoeff() <= 1e-13 * std::max(1.0, scale)) {
      ZonalSpectrum out;
      out.d = d;
      out.degree_eigenvalues = current;
      out.multiplicities.resize(degree_max + 1);
      for (int k = 0; k <= degree_max; ++k) out.multiplicities(k) = special::harmonic_dimension(d, k);
      out.quadrature_nodes = 2 * nodes;
      return out;
    }
    previous = std::move(current);
  }
  throw NumericError("sphere_zonal_spectrum: Funk-Hecke quadrature did not converge (kernel profile too rough)");
}

double zonal_eval(const ZonalSpectrum& spectrum, double t) {
  const int degree_max = static_cast<int>(spectrum.degree_eigenvalues.size()) - 1;
  Eigen::VectorXd p;
  special::gegenbauer_normalized(degree_max, (spectrum.d - 2) / 2.0, t, p);
  return (spectrum.degree_eigenvalues.array() * spectrum.multiplicities.array() * p.array()).sum();
}

ZonalMap::ZonalMap(int d, std::vector<int> degrees) : d_(d), degrees_(std::move(degrees)) {
  require(d_ >= 3, "zonal map: ambient dimension must be >= 3");
  multiplicity_.resize(static_cast<Eigen::Index>(degrees_.size()));
  for (std::size_t b = 0; b < degrees_.size(); ++b) {
    require(degrees_[b] >= 1, "zonal map: degrees must be >= 1");
    multiplicity_(static_cast<Eigen::Index>(b)) = special::harmonic_dimension(d_, degrees_[b]);
  }
}

SampleMoments ZonalMap::moments(const Points& x) const {
  require(x.cols() == d_, "zonal map: point dimension mismatch");
  const Eigen::Index n = x.rows();
  const int degree_max = degrees_.empty() ? 0 : *std::max_element(degrees_.begin(), degrees_.end());
  const double nu = (d_ - 2) / 2.0;
  Eigen::VectorXd pair_sum = Eigen::VectorXd::Zero(degree_max + 1);
  Eigen::VectorXd p;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double t = std::clamp(x.row(i).dot(x.row(j)), -1.0, 1.0);
      special::gegenbauer_normalized(degree_max, nu, t, p);
      pair_sum += p;
    }
  }
  // Off-diagonal pairs counted twice, diagonal P_k(1) = 1 once per point.
  const Eigen::VectorXd gram_mean = (2.0 * pair_sum.array() + static_cast<double>(n)) / (double(n) * double(n));
  SampleMoments m;
  m.n = n;
  m.mean_sq.resize(block_count());
  m.diag.resize(block_count());
  for (Eigen::Index b = 0; b < block_count(); ++b) {
    const int k = degrees_[static_cast<std::size_t>(b)];
    m.mean_sq(b) = multiplicity_(b) * gram_mean(k);
    m.diag(b) = multiplicity_(b);
  }
  return m;
}

Eigen::VectorXd ZonalMap::pair_terms(PointRef x, PointRef y) const {
  const int degree_max = degrees_.empty() ? 0 : *std::max_element(degrees_.begin(), degrees_.end());
  Eigen::VectorXd p;
  special::gegenbauer_normalized(degree_max, (d_ - 2) / 2.0, std::clamp(x.dot(y), -1.0, 1.0), p);
  Eigen::VectorXd out(block_count());
  for (Eigen::Index b = 0; b < block_count(); ++b) out(b) = multiplicity_(b) * p(degrees_[static_cast<std::size_t>(b)]);
  return out;
}

Eigen::VectorXd ZonalMap::sup_norms() const {
  // |Y(x)|^2 <= sum over the degree block = N(d, k)
  return multiplicity_.cwiseSqrt();
}

std::shared_ptr<const FeatureMap> ZonalMap::truncated(Eigen::Index blocks) const {
  return std::make_shared<ZonalMap>(d_, std::vector<int>(degrees_.begin(), degrees_.begin() + blocks));
}

SpectralBasis sphere_basis(const ZonalSpectrum& spectrum, std::string kernel_id) {
  std::vector<int> degrees;
  std::vector<double> values;
  const double top = spectrum.degree_eigenvalues.cwiseAbs().maxCoeff();
  for (int k = 1; k < spectrum.degree_eigenvalues.size(); ++k) {
    const double l = spectrum.degree_eigenvalues(k);
    // Funk-Hecke round-off sits near 1e-14 relative; below 1e-12 a degree is
    // indistinguishable from zero.
    if (l > 1e-12 * top) {
      degrees.push_back(k);
      values.push_back(l);
    }
  }
  require(!degrees.empty(), "sphere_basis: no positive eigenvalue above degree 0");
  // Degree order must also be eigenvalue order.
  for (std::size_t b = 1; b < values.size(); ++b) {
    if (values[b] > values[b - 1]) {
      throw ValidationError("sphere_basis: degree eigenvalues are not nonincreasing (at degree " +
                            std::to_string(degrees[b]) + ")");
    }
  }
  Eigen::VectorXd lambda = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  Eigen::VectorXd mult(lambda.size());
  for (Eigen::Index b = 0; b < lambda.size(); ++b)
    mult(b) = special::harmonic_dimension(spectrum.d, degrees[static_cast<std::size_t>(b)]);
  auto map = std::make_shared<ZonalMap>(spectrum.d, std::move(degrees));
  return SpectralBasis(lambda, mult, std::move(map), Domain{Geometry::sphere, spectrum.d}, true, std::move(kernel_id));
}

}  // namespace gofkit
