#pragma once

#include "gofkit/spectrum.hpp"
#include "gofkit/types.hpp"

#include <functional>
#include <string>
#include <string_view>

namespace gofkit {

/// Parsed kernel identifier. Recognized ids:
///   cosine            closed-form cosine reference kernel on [0,1] (Nystrom)
///   cosine-analytic   the same kernel with its exact eigenpairs
///   gaussian:bw=S     exp(-|x - y|^2 / S^2)
///   constant          K = 1
///   linear            K = <x, y>
struct KernelId {
  std::string family;
  double bandwidth = 0.0;

  std::string str() const;
  static KernelId parse(std::string_view id);
};

KernelFn make_kernel(const KernelId& id);

/// Profile g with K(x, y) = g(<x, y>) on the unit sphere.
std::function<double(double)> make_zonal_profile(const KernelId& id);

/// Everything needed to build (or look up) a spectral basis.
///   cube, d = 1     Nystrom on Gauss-Legendre nodes; centered unless the
///                   kernel is already degenerate (cosine)
///   cube, d > 1     1-D factor basis as above, then tensor_product_basis
///   sphere          Funk-Hecke degree spectrum; `trunc` is the maximum degree
struct DecomposeRequest {
  std::string kernel_id;
  std::string null_id;
  Eigen::Index trunc = 0;         // 0: default truncation
  Eigen::Index nodes = 0;         // 0: default node count
  Eigen::Index factor_trunc = 0;  // cube d > 1 only; 0: default truncation
  double constant_eigenvalue = 1.0;
};

SpectralBasis build_basis(const DecomposeRequest& request);

}  // namespace gofkit
