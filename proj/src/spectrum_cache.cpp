#include "gofkit/spectrum_cache.hpp"

#include "gofkit/error.hpp"
#include "gofkit/kernels.hpp"
#include "gofkit/rng.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace gofkit {

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("spectrum cache: malformed value for '" + key + "'");
  }
}

Eigen::MatrixXd column(const Eigen::VectorXd& v) { return v; }

std::string strip_power(const std::string& id) {
  const auto caret = id.rfind('^');
  return caret == std::string::npos ? id : id.substr(0, caret);
}

void put_nystrom(SpectrumCache& cache, const NystromMap& map, const std::string& prefix) {
  cache.header[prefix + "centered"] = map.centered() ? "1" : "0";
  cache.arrays.emplace_back(prefix + "eigenvalues", column(map.eigenvalues()));
  cache.arrays.emplace_back(prefix + "nodes", Eigen::MatrixXd(map.quadrature().nodes));
  cache.arrays.emplace_back(prefix + "node_values", map.node_values());
  cache.arrays.emplace_back(prefix + "weights", column(map.quadrature().weights));
}

std::shared_ptr<NystromMap> get_nystrom(const SpectrumCache& cache, const std::string& kernel_id,
                                        const std::string& null_id, const std::string& prefix) {
  Quadrature quad;
  quad.domain = Domain::parse(null_id);
  quad.nodes = cache.array(prefix + "nodes");
  quad.weights = cache.array(prefix + "weights").col(0);
  return std::make_shared<NystromMap>(make_kernel(KernelId::parse(kernel_id)), std::move(quad),
                                      cache.array(prefix + "node_values"), cache.array(prefix + "eigenvalues").col(0),
                                      cache.field(prefix + "centered") == "1");
}

}  // namespace

const Eigen::MatrixXd& SpectrumCache::array(const std::string& name) const {
  for (const auto& [key, value] : arrays)
    if (key == name) return value;
  throw ValidationError("spectrum cache: missing array '" + name + "'");
}

const std::string& SpectrumCache::field(const std::string& key) const {
  const auto it = header.find(key);
  if (it == header.end()) throw ValidationError("spectrum cache: missing header field '" + key + "'");
  return it->second;
}

SpectrumCache to_cache(const SpectralBasis& basis) {
  SpectrumCache cache;
  cache.header["kernel"] = basis.kernel_id();
  cache.header["null"] = basis.null_id();
  cache.header["trunc"] = std::to_string(basis.truncation());
  cache.header["degenerate"] = basis.degenerate() ? "1" : "0";
  cache.header["decay"] = format_double(basis.decay_exponent());
  cache.header["nodes"] = "0";
  const FeatureMap& map = basis.map();
  if (const auto* nys = dynamic_cast<const NystromMap*>(&map)) {
    cache.header["kind"] = "nystrom";
    cache.header["nodes"] = std::to_string(nys->quadrature().size());
    put_nystrom(cache, *nys, "");
  } else if (const auto* ten = dynamic_cast<const TensorMap*>(&map)) {
    cache.header["kind"] = "tensor";
    cache.arrays.emplace_back("eigenvalues", column(basis.eigenvalues()));
    cache.arrays.emplace_back("multi_indices", ten->multi_indices().cast<double>());
    const FeatureMap& factor = ten->factor();
    if (const auto* fn = dynamic_cast<const NystromMap*>(&factor)) {
      cache.header["factor_kind"] = "nystrom";
      cache.header["nodes"] = std::to_string(fn->quadrature().size());
      put_nystrom(cache, *fn, "factor_");
    } else if (dynamic_cast<const FunctionMap*>(&factor) != nullptr && strip_power(basis.kernel_id()) == "cosine") {
      cache.header["factor_kind"] = "analytic-cosine";
      cache.header["factor_trunc"] = std::to_string(factor.block_count());
    } else {
      throw ValidationError("spectrum cache: unsupported tensor factor");
    }
  } else if (const auto* zon = dynamic_cast<const ZonalMap*>(&map)) {
    cache.header["kind"] = "zonal";
    cache.arrays.emplace_back("eigenvalues", column(basis.eigenvalues()));
    cache.arrays.emplace_back("multiplicities", column(basis.multiplicities()));
    Eigen::MatrixXd degrees(zon->block_count(), 1);
    for (Eigen::Index b = 0; b < zon->block_count(); ++b) degrees(b, 0) = zon->degrees()[static_cast<std::size_t>(b)];
    cache.arrays.emplace_back("degrees", degrees);
  } else if (dynamic_cast<const FunctionMap*>(&map) != nullptr && basis.kernel_id() == "cosine") {
    cache.header["kind"] = "analytic-cosine";
    cache.arrays.emplace_back("eigenvalues", column(basis.eigenvalues()));
  } else {
    throw ValidationError("spectrum cache: this basis type cannot be serialized");
  }
  return cache;
}

SpectralBasis from_cache(const SpectrumCache& cache) {
  const std::string& kind = cache.field("kind");
  const std::string& kernel = cache.field("kernel");
  const std::string& null_id = cache.field("null");
  const Domain domain = Domain::parse(null_id);
  const bool degenerate = cache.field("degenerate") == "1";
  const double decay = parse_double(cache.field("decay"), "decay");
  const Eigen::VectorXd lambda = cache.array("eigenvalues").col(0);
  if (kind == "nystrom") {
    auto map = get_nystrom(cache, kernel, null_id, "");
    return SpectralBasis(lambda, std::move(map), domain, degenerate, kernel, decay);
  }
  if (kind == "analytic-cosine") {
    const SpectralBasis fresh = cosine_reference_basis(lambda.size());
    return SpectralBasis(lambda, fresh.shared_map(), domain, degenerate, kernel, decay);
  }
  if (kind == "tensor") {
    std::shared_ptr<const FeatureMap> factor;
    const std::string factor_kernel = strip_power(kernel);
    if (cache.field("factor_kind") == "nystrom") {
      factor = get_nystrom(cache, factor_kernel, Domain{Geometry::cube, 1}.id(), "factor_");
    } else {
      factor = cosine_reference_basis(std::stol(cache.field("factor_trunc"))).shared_map();
    }
    const Eigen::MatrixXi multi = cache.array("multi_indices").cast<int>();
    auto map = std::make_shared<TensorMap>(std::move(factor), multi);
    return SpectralBasis(lambda, std::move(map), domain, degenerate, kernel, decay);
  }
  if (kind == "zonal") {
    const Eigen::MatrixXd& deg = cache.array("degrees");
    std::vector<int> degrees(static_cast<std::size_t>(deg.rows()));
    for (Eigen::Index b = 0; b < deg.rows(); ++b) degrees[static_cast<std::size_t>(b)] = static_cast<int>(deg(b, 0));
    auto map = std::make_shared<ZonalMap>(domain.dim, std::move(degrees));
    return SpectralBasis(lambda, cache.array("multiplicities").col(0), std::move(map), domain, degenerate, kernel,
                         decay);
  }
  throw ValidationError("spectrum cache: unknown kind '" + kind + "'");
}

void save_cache(const SpectrumCache& cache, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NumericError("cannot open '" + path.string() + "' for writing");
  out << kSpectrumCacheMagic << '\n';
  // Fixed field order first, then the rest alphabetically.
  static const char* kOrder[] = {"kind", "kernel", "null", "trunc", "nodes"};
  for (const char* key : kOrder) {
    const auto it = cache.header.find(key);
    if (it != cache.header.end()) out << key << ' ' << it->second << '\n';
  }
  for (const auto& [key, value] : cache.header) {
    if (std::find(std::begin(kOrder), std::end(kOrder), key) != std::end(kOrder)) continue;
    out << key << ' ' << value << '\n';
  }
  for (const auto& [name, a] : cache.arrays) out << "array " << name << ' ' << a.rows() << ' ' << a.cols() << '\n';
  out << "end\n";
  for (const auto& [name, a] : cache.arrays) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      auto bits = std::bit_cast<std::uint64_t>(a.data()[i]);
      unsigned char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
      out.write(reinterpret_cast<const char*>(bytes), 8);
    }
  }
  if (!out) throw NumericError("failed writing '" + path.string() + "'");
}

SpectrumCache load_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open spectrum cache '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line != kSpectrumCacheMagic) {
    if (line.starts_with("GOFKIT-SPEC")) {
      throw ValidationError("spectrum cache '" + path.string() + "' has version '" + line +
                            "', expected '" + kSpectrumCacheMagic + "'");
    }
    throw ValidationError("'" + path.string() + "' is not a spectrum cache");
  }
  SpectrumCache cache;
  std::vector<std::tuple<std::string, Eigen::Index, Eigen::Index>> shapes;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    const auto space = line.find(' ');
    if (space == std::string::npos) throw ValidationError("spectrum cache: malformed header line '" + line + "'");
    const std::string key = line.substr(0, space);
    const std::string value = line.substr(space + 1);
    if (key == "array") {
      std::istringstream is(value);
      std::string name;
      Eigen::Index rows = -1, cols = -1;
      if (!(is >> name >> rows >> cols) || rows < 0 || cols < 0) {
        throw ValidationError("spectrum cache: malformed array line '" + line + "'");
      }
      shapes.emplace_back(name, rows, cols);
    } else {
      cache.header[key] = value;
    }
  }
  if (!ended) throw ValidationError("spectrum cache: header not terminated");
  for (const auto& [name, rows, cols] : shapes) {
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      unsigned char bytes[8];
      if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw ValidationError("spectrum cache: truncated payload");
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
      a.data()[i] = std::bit_cast<double>(bits);
    }
    cache.arrays.emplace_back(name, std::move(a));
  }
  return cache;
}

std::string cache_key(const std::string& kernel_id, const std::string& null_id, Eigen::Index trunc,
                      Eigen::Index nodes) {
  std::ostringstream key;
  key << kernel_id << '|' << null_id << '|' << trunc << '|' << nodes << '|' << kSpectrumCacheMagic;
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << hash_label(key.str());
  return hex.str();
}

}  // namespace gofkit
