#pragma once

#include "treegraph/kdtree.hpp"
#include "treegraph/types.hpp"

#include <span>
#include <vector>

namespace treegraph {

/// Undirected weighted edge with u < v; w is the Euclidean length in meters.
struct Edge {
  NodeId u;
  NodeId v;
  double w;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Incident {
  NodeId node;
  double w;
  std::uint32_t edge;  // index into HybridGraph::edges()
};

/// Immutable undirected graph over point indices with CSR adjacency.
///
/// Edges are kept sorted by (u, v). Construction rejects self-loops,
/// duplicates, out-of-range endpoints and non-positive weights.
class HybridGraph {
 public:
  HybridGraph() = default;
  HybridGraph(std::size_t node_count, std::vector<Edge> edges);

  [[nodiscard]] std::size_t node_count() const { return n_; }
  [[nodiscard]] std::size_t edge_count() const { return edges_.size(); }
  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
  [[nodiscard]] std::span<const Incident> neighbors(NodeId v) const {
    return {adj_.data() + offset_[v], adj_.data() + offset_[v + 1]};
  }
  [[nodiscard]] std::size_t degree(NodeId v) const { return offset_[v + 1] - offset_[v]; }
  [[nodiscard]] bool has_edge(NodeId a, NodeId b) const;

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offset_{0};
  std::vector<Incident> adj_;
};

/// Disjoint-set forest with path halving and union by size.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n);
  NodeId find(NodeId x);
  /// Returns false when a and b were already joined.
  bool unite(NodeId a, NodeId b);
  [[nodiscard]] std::size_t set_count() const { return sets_; }

 private:
  std::vector<NodeId> parent_;
  std::vector<std::uint32_t> size_;
  std::size_t sets_;
};

/// Per-node lists of the k nearest other points, ordered by (distance, index).
/// Coincident points are never neighbors of each other.
std::vector<std::vector<Neighbor>> knn_neighbors(const PointCloud& cloud, int k);

/// Symmetrized k-nearest-neighbor graph (an edge exists if either endpoint
/// selects the other). k is clamped to n - 1.
HybridGraph build_knn_graph(const PointCloud& cloud, int k);

/// Per-node cutoff mean + population stddev of incident edge lengths.
std::vector<double> dispersion_thresholds(const HybridGraph& graph);

/// Removes every edge longer than the cutoff of either endpoint. Statistics
/// come from the unpruned graph (one simultaneous pass).
HybridGraph prune_dispersed_edges(const HybridGraph& graph);

/// Connected-component label per node. Labels are 0-based and numbered in
/// order of each component's smallest node index.
std::vector<std::uint32_t> connected_components(const HybridGraph& graph);
std::size_t component_count(const HybridGraph& graph);

/// Joins all components by adding shortest-first bridge edges.
///
/// Bridge candidates are the five shortest point pairs per component pair,
/// taken from nearest-foreign-point queries; candidates are pooled, sorted by
/// length and added greedily with a union-find until one component remains.
/// Rounds repeat on the merged labels when a round leaves several
/// components. Throws GraphError when a component cannot be reached (all of
/// its points coincide with foreign points).
HybridGraph repair_connectivity(const HybridGraph& graph, const PointCloud& cloud,
                                std::vector<Edge>* added = nullptr);

/// KNN build, prune and repair in sequence.
HybridGraph build_hybrid_graph(const PointCloud& cloud, int k);

}  // namespace treegraph
