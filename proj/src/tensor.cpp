#include "gofkit/error.hpp"
#include "gofkit/spectrum.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace gofkit {

TensorMap::TensorMap(std::shared_ptr<const FeatureMap> factor, Eigen::MatrixXi multi_indices)
    : factor_(std::move(factor)), multi_indices_(std::move(multi_indices)) {
  require(factor_ && factor_->has_explicit_features(), "tensor map needs an explicit factor basis");
  require(multi_indices_.size() == 0 || multi_indices_.maxCoeff() <= factor_->block_count(),
          "tensor map: multi-index exceeds factor basis");
}

Eigen::MatrixXd TensorMap::features(const Points& x) const {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = multi_indices_.cols();
  require(x.cols() == d, "tensor map: point dimension mismatch");
  const Eigen::Index used = multi_indices_.size() == 0 ? 0 : multi_indices_.maxCoeff();
  auto factor = used > 0 ? factor_->truncated(used) : factor_;
  std::vector<Eigen::MatrixXd> per_coord(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    Points column = x.col(j);
    if (used > 0) per_coord[static_cast<std::size_t>(j)] = factor->features(column);
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Ones(n, multi_indices_.rows());
  for (Eigen::Index b = 0; b < multi_indices_.rows(); ++b) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const int k = multi_indices_(b, j);
      if (k > 0) out.col(b).array() *= per_coord[static_cast<std::size_t>(j)].col(k - 1).array();
    }
  }
  return out;
}

Eigen::VectorXd TensorMap::sup_norms() const {
  const Eigen::VectorXd factor_sup = factor_->sup_norms();
  Eigen::VectorXd out = Eigen::VectorXd::Ones(multi_indices_.rows());
  for (Eigen::Index b = 0; b < multi_indices_.rows(); ++b)
    for (Eigen::Index j = 0; j < multi_indices_.cols(); ++j)
      if (multi_indices_(b, j) > 0) out(b) *= factor_sup(multi_indices_(b, j) - 1);
  return out;
}

std::shared_ptr<const FeatureMap> TensorMap::truncated(Eigen::Index blocks) const {
  return std::make_shared<TensorMap>(factor_, multi_indices_.topRows(blocks));
}

SpectralBasis tensor_product_basis(const SpectralBasis& factor, int d, Eigen::Index K, const TensorOptions& options) {
  require(d >= 1, "tensor_product_basis: d must be >= 1");
  require(K >= 1, "tensor_product_basis: K must be >= 1");
  require(factor.domain() == Domain{Geometry::cube, 1}, "tensor_product_basis: factor must live on [0,1]");
  require(factor.map().has_explicit_features(), "tensor_product_basis: factor needs explicit eigenfunctions");
  const bool with_constant = factor.degenerate();
  if (with_constant) require(options.constant_eigenvalue > 0.0, "constant-mode eigenvalue must be positive");

  // Per-coordinate levels sorted by value: (value, factor index; 0 = constant).
  struct Level {
    double value;
    int index;
  };
  std::vector<Level> levels;
  if (with_constant) levels.push_back({options.constant_eigenvalue, 0});
  for (Eigen::Index k = 0; k < factor.blocks(); ++k) levels.push_back({factor.eigenvalues()(k), static_cast<int>(k + 1)});
  std::stable_sort(levels.begin(), levels.end(), [](const Level& a, const Level& b) { return a.value > b.value; });
  const int L = static_cast<int>(levels.size());

  auto to_multi = [&](const std::vector<int>& pos) {
    std::vector<int> idx(pos.size());
    for (std::size_t j = 0; j < pos.size(); ++j) idx[j] = levels[static_cast<std::size_t>(pos[j])].index;
    return idx;
  };
  auto value_of = [&](const std::vector<int>& pos) {
    double v = 1.0;
    for (int p : pos) v *= levels[static_cast<std::size_t>(p)].value;
    return v;
  };

  struct Entry {
    TensorCandidate candidate;
    std::vector<int> pos;
    bool operator<(const Entry& other) const { return candidate < other.candidate; }
  };
  std::priority_queue<Entry> frontier;
  std::set<std::vector<int>> seen;
  std::vector<int> start(static_cast<std::size_t>(d), 0);
  frontier.push({{value_of(start), to_multi(start)}, start});
  seen.insert(start);

  std::vector<double> values;
  std::vector<std::vector<int>> chosen;
  while (static_cast<Eigen::Index>(values.size()) < K) {
    if (frontier.empty()) {
      throw ValidationError("tensor_product_basis: K = " + std::to_string(K) +
                            " exceeds the enumerable lattice of the factor basis");
    }
    Entry top = frontier.top();
    frontier.pop();
    for (int j = 0; j < d; ++j) {
      std::vector<int> next = top.pos;
      if (++next[static_cast<std::size_t>(j)] >= L) continue;
      if (!seen.insert(next).second) continue;
      frontier.push({{value_of(next), to_multi(next)}, next});
    }
    if (frontier.size() > options.frontier_budget) {
      throw ValidationError("tensor_product_basis: K exceeds enumerable frontier budget");
    }
    const bool all_constant = std::all_of(top.candidate.index.begin(), top.candidate.index.end(),
                                          [](int k) { return k == 0; });
    if (all_constant) continue;
    values.push_back(top.candidate.value);
    chosen.push_back(top.candidate.index);
  }

  Eigen::VectorXd lambda(K);
  Eigen::MatrixXi multi(K, d);
  for (Eigen::Index b = 0; b < K; ++b) {
    lambda(b) = values[static_cast<std::size_t>(b)];
    for (int j = 0; j < d; ++j) multi(b, j) = chosen[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)];
  }
  auto map = std::make_shared<TensorMap>(factor.shared_map(), multi);
  std::optional<double> decay;
  if (K < 8) decay = factor.decay_exponent();
  const std::string id = factor.kernel_id().empty() ? std::string{} : factor.kernel_id() + "^" + std::to_string(d);
  return SpectralBasis(lambda, std::move(map), Domain{Geometry::cube, d}, with_constant, id, decay);
}

}  // namespace gofkit
