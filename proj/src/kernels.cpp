#include "gofkit/kernels.hpp"

#include "gofkit/error.hpp"

#include <Eigen/Eigenvalues>

#include <charconv>
#include <cmath>
#include <sstream>
#include <string>

namespace gofkit {

std::string KernelId::str() const {
  if (family == "gaussian") {
    std::ostringstream os;
    os.precision(17);
    os << "gaussian:bw=" << bandwidth;
    return os.str();
  }
  return family;
}

KernelId KernelId::parse(std::string_view id) {
  KernelId out;
  const auto colon = id.find(':');
  out.family = std::string(id.substr(0, colon));
  if (out.family == "gaussian") {
    if (colon == std::string_view::npos || !id.substr(colon + 1).starts_with("bw=")) {
      throw ValidationError("kernel id '" + std::string(id) + "': gaussian needs a bandwidth, e.g. gaussian:bw=0.5");
    }
    const std::string value(id.substr(colon + 4));
    try {
      std::size_t used = 0;
      out.bandwidth = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError("kernel id '" + std::string(id) + "': malformed bandwidth");
    }
    require(out.bandwidth > 0.0, "kernel bandwidth must be positive");
    return out;
  }
  if (out.family == "cosine" || out.family == "cosine-analytic" || out.family == "constant" || out.family == "linear") {
    require(colon == std::string_view::npos, "kernel '" + out.family + "' takes no parameters");
    return out;
  }
  throw ValidationError("unknown kernel id '" + std::string(id) + "'");
}

KernelFn make_kernel(const KernelId& id) {
  if (id.family == "gaussian") {
    const double inv = 1.0 / (id.bandwidth * id.bandwidth);
    return [inv](PointRef x, PointRef y) { return std::exp(-(x - y).squaredNorm() * inv); };
  }
  if (id.family == "cosine" || id.family == "cosine-analytic") {
    return [](PointRef x, PointRef y) {
      require(x.size() == 1 && y.size() == 1, "cosine kernel is defined on [0,1]");
      return cosine_reference_kernel(x(0), y(0));
    };
  }
  if (id.family == "constant") return [](PointRef, PointRef) { return 1.0; };
  if (id.family == "linear") return [](PointRef x, PointRef y) { return x.dot(y); };
  throw ValidationError("unknown kernel family '" + id.family + "'");
}

std::function<double(double)> make_zonal_profile(const KernelId& id) {
  if (id.family == "gaussian") {
    const double inv = 1.0 / (id.bandwidth * id.bandwidth);
    // |x - y|^2 = 2 - 2t on the sphere
    return [inv](double t) { return std::exp(-2.0 * (1.0 - t) * inv); };
  }
  if (id.family == "constant") return [](double) { return 1.0; };
  if (id.family == "linear") return [](double t) { return t; };
  throw ValidationError("kernel '" + id.str() + "' has no zonal form on the sphere");
}

namespace {

Eigen::VectorXd gram_spectrum(const KernelFn& kernel, const Quadrature& quad, bool center) {
  const Eigen::Index n = quad.size();
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) gram(i, j) = kernel(quad.nodes.row(i), quad.nodes.row(j));
  if (center) {
    const Eigen::VectorXd m = gram * quad.weights;
    const double c = quad.weights.dot(m);
    gram.colwise() -= m;
    gram.rowwise() -= m.transpose();
    gram.array() += c;
  }
  const Eigen::VectorXd sw = quad.weights.cwiseSqrt();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sw.asDiagonal() * gram * sw.asDiagonal(),
                                                        Eigen::EigenvaluesOnly);
  Eigen::VectorXd values = solver.eigenvalues().reverse();
  Eigen::Index positive = 0;
  const double floor = 1e-12 * std::max(values(0), 0.0);
  while (positive < values.size() && values(positive) > floor) ++positive;
  require(positive >= 1, "kernel has no positive eigenvalue under this quadrature");
  return values.head(positive);
}

SpectralBasis interval_basis(const KernelId& kid, Eigen::Index trunc, Eigen::Index nodes) {
  if (kid.family == "cosine-analytic") return cosine_reference_basis(trunc > 0 ? trunc : 256);
  const KernelFn kernel = make_kernel(kid);
  const bool center = kid.family != "cosine";
  Eigen::Index K = trunc;
  if (K == 0) {
    const Quadrature pilot = uniform_interval_quadrature(static_cast<int>(nodes > 0 ? nodes : 256));
    K = default_truncation(gram_spectrum(kernel, pilot, center));
  }
  const Eigen::Index N = nodes > 0 ? nodes : default_node_count(K);
  NystromOptions options;
  options.center = center;
  options.kernel_id = kid.str();
  return nystrom_decompose(kernel, uniform_interval_quadrature(static_cast<int>(N)), K, options);
}

}  // namespace

SpectralBasis build_basis(const DecomposeRequest& request) {
  const KernelId kid = KernelId::parse(request.kernel_id);
  const Domain domain = Domain::parse(request.null_id);
  require(request.trunc >= 0 && request.nodes >= 0, "truncation and node count must be nonnegative");
  if (domain.geometry == Geometry::sphere) {
    require(domain.dim >= 3, "sphere spectra need ambient dimension >= 3");
    const auto profile = make_zonal_profile(kid);
    int degree_max = static_cast<int>(request.trunc);
    if (degree_max == 0) {
      const ZonalSpectrum pilot = sphere_zonal_spectrum(profile, domain.dim, 64);
      degree_max = 64;
      const double top = pilot.degree_eigenvalues.segment(1, 64).cwiseAbs().maxCoeff();
      for (int k = 1; k <= 64; ++k) {
        if (pilot.degree_eigenvalues(k) <= 1e-8 * top) {
          degree_max = k;
          break;
        }
      }
    }
    return sphere_basis(sphere_zonal_spectrum(profile, domain.dim, degree_max), kid.str());
  }
  if (domain.dim == 1) return interval_basis(kid, request.trunc, request.nodes);

  require(kid.family != "constant" && kid.family != "linear",
          "kernel '" + kid.str() + "' is not supported on the cube for d > 1");
  const SpectralBasis factor = interval_basis(kid, request.factor_trunc, request.nodes);
  TensorOptions options;
  options.constant_eigenvalue = request.constant_eigenvalue;
  return tensor_product_basis(factor, domain.dim, request.trunc > 0 ? request.trunc : 256, options);
}

}  // namespace gofkit
