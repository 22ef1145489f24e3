#include "gofkit/types.hpp"

#include "gofkit/error.hpp"

#include <charconv>
#include <cmath>
#include <string>

namespace gofkit {

bool Domain::contains(PointRef x, double tol) const {
  if (x.size() != dim) return false;
  if (geometry == Geometry::cube) {
    return (x.array() >= -tol).all() && (x.array() <= 1.0 + tol).all();
  }
  return std::abs(x.norm() - 1.0) <= std::max(tol, 1e-9);
}

void Domain::check_points(const Points& x, std::string_view what) const {
  if (x.cols() != dim) {
    throw ValidationError(std::string(what) + ": points have dimension " + std::to_string(x.cols()) +
                          ", domain " + id() + " expects " + std::to_string(dim));
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (!contains(x.row(i), 1e-8)) {
      throw ValidationError(std::string(what) + ": row " + std::to_string(i) + " lies outside " + id());
    }
  }
}

std::string Domain::id() const {
  return std::string(geometry == Geometry::cube ? "uniform-cube" : "uniform-sphere") + ":d=" + std::to_string(dim);
}

Domain Domain::parse(std::string_view null_id) {
  Domain out;
  std::string_view rest;
  if (null_id.starts_with("uniform-cube")) {
    out.geometry = Geometry::cube;
    rest = null_id.substr(12);
  } else if (null_id.starts_with("uniform-sphere")) {
    out.geometry = Geometry::sphere;
    rest = null_id.substr(14);
  } else {
    throw ValidationError("unknown null id '" + std::string(null_id) + "' (expected uniform-cube:d=N or uniform-sphere:d=N)");
  }
  if (rest.empty()) {
    out.dim = out.geometry == Geometry::cube ? 1 : 3;
  } else {
    if (!rest.starts_with(":d=")) throw ValidationError("malformed null id '" + std::string(null_id) + "'");
    rest.remove_prefix(3);
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), out.dim);
    if (ec != std::errc{} || ptr != rest.data() + rest.size()) {
      throw ValidationError("malformed dimension in null id '" + std::string(null_id) + "'");
    }
  }
  if (out.dim < 1 || (out.geometry == Geometry::sphere && out.dim < 2)) {
    throw ValidationError("invalid dimension in null id '" + std::string(null_id) + "'");
  }
  return out;
}

Sample::Sample(Points points) : points_(std::move(points)) {
  require(points_.rows() >= 1, "sample must contain at least one point");
  require(points_.cols() >= 1, "sample points must have at least one coordinate");
}

Sample::Sample(Points points, const Domain& domain) : Sample(std::move(points)) {
  domain.check_points(points_, "sample");
}

}  // namespace gofkit
