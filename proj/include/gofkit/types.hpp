#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <string_view>

namespace gofkit {

/// Points are stored one per row; row-major so that a row binds to
/// `PointRef` without a copy.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PointRef = Eigen::Ref<const Eigen::RowVectorXd>;

/// Pointwise kernel K(x, y).
using KernelFn = std::function<double(PointRef, PointRef)>;

enum class Geometry { cube, sphere };

/// Sample space together with its uniform null distribution P0:
/// Uniform[0,1]^d for the cube, normalized surface measure for S^{d-1}.
struct Domain {
  Geometry geometry = Geometry::cube;
  int dim = 1;  // ambient dimension (d for S^{d-1})

  bool contains(PointRef x, double tol = 1e-9) const;
  void check_points(const Points& x, std::string_view what) const;

  /// `uniform-cube:d=5` or `uniform-sphere:d=3`.
  std::string id() const;
  static Domain parse(std::string_view null_id);

  friend bool operator==(const Domain&, const Domain&) = default;
};

/// An ordered batch of observations X_1..X_n.
class Sample {
 public:
  explicit Sample(Points points);
  Sample(Points points, const Domain& domain);

  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }
  const Points& points() const { return points_; }
  auto point(Eigen::Index i) const { return points_.row(i); }

 private:
  Points points_;
};

}  // namespace gofkit
