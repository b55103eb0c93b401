#pragma once

#include "treegraph/types.hpp"

#include <span>
#include <utility>
#include <vector>

namespace treegraph {

struct Neighbor {
  NodeId id;
  double dist;  // Euclidean, not squared
};

/// Static 3D k-d tree over a borrowed point array. The points must outlive
/// the tree. Query results are ordered by (distance, index), so equal
/// distances resolve to the smaller index.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points, int leaf_size = 12);

  [[nodiscard]] std::size_t size() const { return points_.size(); }

  /// k nearest points to `q`, skipping index `skip` (pass kNoNode to keep all).
  [[nodiscard]] std::vector<Neighbor> knn(const Vec3& q, std::size_t k,
                                          NodeId skip = kNoNode) const;

  /// All points within `radius` of `q` (inclusive), ordered by (distance, index).
  [[nodiscard]] std::vector<Neighbor> radius(const Vec3& q, double radius) const;

  /// Attach a per-point label. Enables nearest_foreign().
  void set_labels(std::span<const std::uint32_t> labels);

  /// Nearest point whose label differs from `label` and whose distance is
  /// strictly positive. Returns {kNoNode, inf} when there is none.
  [[nodiscard]] Neighbor nearest_foreign(const Vec3& q, std::uint32_t label) const;

 private:
  struct Node {
    Vec3 lo, hi;
    std::uint32_t begin = 0, end = 0;
    std::int32_t left = -1, right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  [[nodiscard]] double box_dist2(const Node& n, const Vec3& q) const;

  std::span<const Vec3> points_;
  std::vector<NodeId> perm_;
  std::vector<Node> nodes_;
  int leaf_size_;

  std::vector<std::uint32_t> labels_;
  std::vector<std::uint32_t> node_label_;  // uniform label of a subtree, or kMixed
};

}  // namespace treegraph
