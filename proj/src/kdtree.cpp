#include "treegraph/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

namespace treegraph {

namespace {

constexpr std::uint32_t kMixed = static_cast<std::uint32_t>(-1);

using Candidate = std::pair<double, NodeId>;  // (squared distance, index)

}  // namespace

KdTree::KdTree(std::span<const Vec3> points, int leaf_size)
    : points_(points), perm_(points.size()), leaf_size_(std::max(1, leaf_size)) {
  std::iota(perm_.begin(), perm_.end(), NodeId{0});
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / static_cast<std::size_t>(leaf_size_) + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({});
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[perm_[i]]);
    hi = hi.cwiseMax(points_[perm_[i]]);
  }
  nodes_[id].lo = lo;
  nodes_[id].hi = hi;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= static_cast<std::uint32_t>(leaf_size_)) return id;

  int dim = 0;
  (hi - lo).maxCoeff(&dim);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                   [&](NodeId a, NodeId b) {
                     const double pa = points_[a][dim], pb = points_[b][dim];
                     return pa < pb || (pa == pb && a < b);
                   });
  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double KdTree::box_dist2(const Node& n, const Vec3& q) const {
  double d2 = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double e = std::max({0.0, n.lo[c] - q[c], q[c] - n.hi[c]});
    d2 += e * e;
  }
  return d2;
}

std::vector<Neighbor> KdTree::knn(const Vec3& q, std::size_t k, NodeId skip) const {
  std::vector<Neighbor> out;
  if (k == 0 || nodes_.empty()) return out;
  std::priority_queue<Candidate> heap;  // max-heap on (d2, index)

  auto visit = [&](auto&& self, std::int32_t id) -> void {
    const Node& n = nodes_[id];
    if (heap.size() == k && box_dist2(n, q) > heap.top().first) return;
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const NodeId p = perm_[i];
        if (p == skip) continue;
        const Candidate c{(points_[p] - q).squaredNorm(), p};
        if (heap.size() < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    const double dl = box_dist2(nodes_[n.left], q);
    const double dr = box_dist2(nodes_[n.right], q);
    if (dl <= dr) {
      self(self, n.left);
      self(self, n.right);
    } else {
      self(self, n.right);
      self(self, n.left);
    }
  };
  visit(visit, 0);

  out.resize(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    out[i] = {heap.top().second, std::sqrt(heap.top().first)};
    heap.pop();
  }
  return out;
}

std::vector<Neighbor> KdTree::radius(const Vec3& q, double r) const {
  std::vector<Candidate> found;
  if (nodes_.empty()) return {};
  const double r2 = r * r;
  auto visit = [&](auto&& self, std::int32_t id) -> void {
    const Node& n = nodes_[id];
    if (box_dist2(n, q) > r2) return;
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const NodeId p = perm_[i];
        const double d2 = (points_[p] - q).squaredNorm();
        if (d2 <= r2) found.emplace_back(d2, p);
      }
      return;
    }
    self(self, n.left);
    self(self, n.right);
  };
  visit(visit, 0);
  std::sort(found.begin(), found.end());
  std::vector<Neighbor> out;
  out.reserve(found.size());
  for (const auto& [d2, p] : found) out.push_back({p, std::sqrt(d2)});
  return out;
}

void KdTree::set_labels(std::span<const std::uint32_t> labels) {
  labels_.assign(labels.begin(), labels.end());
  node_label_.assign(nodes_.size(), kMixed);
  // children are always created after their parent, so a reverse sweep is bottom-up
  for (std::size_t id = nodes_.size(); id-- > 0;) {
    const Node& n = nodes_[id];
    if (n.left < 0) {
      std::uint32_t l = labels_[perm_[n.begin]];
      for (std::uint32_t i = n.begin + 1; i < n.end && l != kMixed; ++i)
        if (labels_[perm_[i]] != l) l = kMixed;
      node_label_[id] = l;
    } else {
      const auto a = node_label_[n.left], b = node_label_[n.right];
      node_label_[id] = (a == b) ? a : kMixed;
    }
  }
}

Neighbor KdTree::nearest_foreign(const Vec3& q, std::uint32_t label) const {
  Candidate best{std::numeric_limits<double>::infinity(), kNoNode};
  if (nodes_.empty() || labels_.empty()) return {kNoNode, best.first};
  auto visit = [&](auto&& self, std::int32_t id) -> void {
    const Node& n = nodes_[id];
    if (node_label_[id] == label) return;
    if (box_dist2(n, q) > best.first) return;
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const NodeId p = perm_[i];
        if (labels_[p] == label) continue;
        const double d2 = (points_[p] - q).squaredNorm();
        if (d2 <= 0.0) continue;
        const Candidate c{d2, p};
        if (c < best) best = c;
      }
      return;
    }
    const double dl = box_dist2(nodes_[n.left], q);
    const double dr = box_dist2(nodes_[n.right], q);
    if (dl <= dr) {
      self(self, n.left);
      self(self, n.right);
    } else {
      self(self, n.right);
      self(self, n.left);
    }
  };
  visit(visit, 0);
  return {best.second, std::sqrt(best.first)};
}

}  // namespace treegraph
