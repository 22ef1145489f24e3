#pragma once

#include "gofkit/spectrum.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gofkit {

inline constexpr const char* kSpectrumCacheMagic = "GOFKIT-SPEC v1";

/// On-disk form of a spectral basis.
///
/// Layout: text header lines terminated by a line `end`, then the arrays'
/// float64 values in little-endian byte order, column-major, in header
/// order:
///
///     GOFKIT-SPEC v1
///     kind nystrom | tensor | analytic-cosine | zonal
///     kernel <kernel id>
///     null <null id>
///     trunc <K>
///     nodes <N>
///     <key> <value>          (kind-specific scalars)
///     array <name> <rows> <cols>
///     end
struct SpectrumCache {
  std::map<std::string, std::string> header;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> arrays;

  const Eigen::MatrixXd& array(const std::string& name) const;
  const std::string& field(const std::string& key) const;
};

SpectrumCache to_cache(const SpectralBasis& basis);
/// Rebuilds the basis; the kernel is re-created from the header's kernel id.
SpectralBasis from_cache(const SpectrumCache& cache);

void save_cache(const SpectrumCache& cache, const std::filesystem::path& path);
/// Throws ValidationError on a missing file, a wrong magic/version line or a
/// truncated payload.
SpectrumCache load_cache(const std::filesystem::path& path);

/// Content address for (kernel id, null id, K, N, format version).
std::string cache_key(const std::string& kernel_id, const std::string& null_id, Eigen::Index trunc,
                      Eigen::Index nodes);

}  // namespace gofkit
