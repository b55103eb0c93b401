#pragma once

#include "treegraph/config.hpp"
#include "treegraph/graph.hpp"
#include "treegraph/types.hpp"

#include <span>
#include <vector>

namespace treegraph {

/// Single-source shortest-path tree rooted at the tree base.
struct PathTree {
  NodeId root = kNoNode;
  std::vector<double> distance;     // root distance, meters
  std::vector<NodeId> predecessor;  // kNoNode at the root
  std::vector<NodeId> order;        // settle order; each node follows its predecessor

  [[nodiscard]] std::size_t size() const { return distance.size(); }
  /// Children lists of the predecessor tree, each ascending.
  [[nodiscard]] std::vector<std::vector<NodeId>> children() const;
  /// Nodes that are no node's predecessor.
  [[nodiscard]] std::vector<NodeId> terminals() const;
};

struct NodeMetrics {
  std::vector<std::uint32_t> freq_raw;   // path frequency
  std::vector<std::uint32_t> freq;       // corrected path frequency
  std::vector<NodeId> tip_subtree;       // farthest tip in the node's subtree
  std::vector<NodeId> tip;               // tip used for clustering
  std::vector<double> reverse_distance;  // D(tip) - D(node)
};

struct Cluster {
  std::vector<NodeId> members;  // ascending
  NodeId tip = kNoNode;
  int bin = 0;
  NodeId representative = kNoNode;
  Vec3 median = Vec3::Zero();
};

struct ClusterSet {
  std::vector<std::uint32_t> cluster_of;  // per node
  std::vector<Cluster> clusters;
};

struct SkeletonNode {
  Vec3 pos = Vec3::Zero();
  std::uint32_t parent = kNoNode;
  std::uint32_t cluster = kNoNode;
  std::uint32_t freq = 0;
  std::uint32_t cluster_size = 0;
  double radius = 0.0;
};

/// Rooted skeleton tree; node ids are vector positions.
struct SkeletonGraph {
  std::vector<SkeletonNode> nodes;
  std::uint32_t root = 0;

  [[nodiscard]] std::size_t size() const { return nodes.size(); }
  [[nodiscard]] std::vector<std::vector<std::uint32_t>> children() const;
  /// Distance from node to its parent; zero at the root.
  [[nodiscard]] double edge_length(std::uint32_t node) const;
  /// Parents before children.
  [[nodiscard]] std::vector<std::uint32_t> topological_order() const;
  /// Throws SkeletonError unless there is one root and every node reaches it.
  void validate() const;
};

/// Dijkstra from `root`. Equal distances keep the smaller predecessor index.
/// Throws GraphError if a node is unreachable.
PathTree shortest_paths(const HybridGraph& graph, NodeId root);

/// Number of node-to-root paths through each node (its subtree size).
std::vector<std::uint32_t> path_frequency(const PathTree& tree);

/// Neighbor propagation of path frequency in ascending root distance.
/// Anomaly mode only lifts nodes with zero frequency; literal mode lifts every
/// node to the maximum over its closer neighbors.
std::vector<std::uint32_t> correct_path_frequency(std::span<const std::uint32_t> freq_raw,
                                                  const PathTree& tree, const HybridGraph& graph,
                                                  FrequencyCorrection mode);

/// Farthest terminal (max root distance, ties to smaller index) in each
/// node's subtree.
std::vector<NodeId> farthest_tip(const PathTree& tree);

std::vector<double> reverse_distance(std::span<const double> distance, std::span<const NodeId> tips);

/// Cuts the graph into bands of root distance `width` wide. Every connected
/// piece of a band takes the farthest of its members' tips, so a stem cross
/// section shares one tip while a branch keeps its own once it separates.
std::vector<NodeId> unify_tips_by_band(const HybridGraph& graph, std::span<const double> distance,
                                       std::span<const NodeId> tips, double width);

/// Walks the shortest-path tree from the root; a node whose tip lies less
/// than `min_length` beyond it takes its predecessor's tip instead, so
/// twigs shorter than `min_length` do not start branches of their own.
std::vector<NodeId> absorb_short_tips(const PathTree& tree, std::span<const NodeId> tips,
                                      double min_length);

/// Band width used when none is configured: a multiple of the median edge
/// length, so that sparse clouds still form closed stem rings.
double default_band_width(const HybridGraph& graph);

struct MetricOptions {
  FrequencyCorrection correction = FrequencyCorrection::Anomaly;
  TipMode tip_mode = TipMode::Band;
  double band_width = 0.2;  // 0 = default_band_width
  double min_branch_length = 0.0;
};

NodeMetrics compute_metrics(const PathTree& tree, const HybridGraph& graph,
                            const MetricOptions& opts = {});

/// Exponentially spaced bin boundaries between lo and hi, finest near lo.
/// Returns {lo} when hi == lo.
std::vector<double> step_size_vector(double lo, double hi, double alpha, int n_bins);

/// Half-open bin lookup; values at or beyond the last boundary fall in the
/// last bin, values below the first in bin 0.
int bin_index(std::span<const double> boundaries, double value);

struct MeanShiftParams {
  int max_iterations = 50;
  double tolerance = 1e-4;
};

/// Flat-kernel mean shift. Returns a mode label per point, numbered by the
/// smallest point index assigned to each mode.
std::vector<std::uint32_t> mean_shift(std::span<const Vec3> points, double bandwidth,
                                      const MeanShiftParams& params = {});

NodeId select_representative(std::span<const NodeId> members, std::span<const std::uint32_t> freq);

struct L1MedianResult {
  Vec3 position;
  int iterations = 0;
  std::vector<double> objective;  // sum of distances after each iterate
};

/// Geometric median by Weiszfeld iteration from the centroid with the
/// Vardi-Zhang step at data points.
L1MedianResult l1_median_trace(std::span<const Vec3> points, double tol = 1e-6, int max_iter = 100);
Vec3 l1_median(std::span<const Vec3> points, double tol = 1e-6, int max_iter = 100);

/// Partitions nodes by (tip, reverse-distance bin); optionally splits each
/// cluster by mean shift. Fills representatives and L1-medians.
ClusterSet adaptive_cluster(const PointCloud& cloud, const NodeMetrics& metrics,
                            std::span<const double> boundaries, bool leaf_on);

/// Representative and L1 median of every cluster, in place.
void cluster_centers(const PointCloud& cloud, const NodeMetrics& metrics, ClusterSet& clusters);

/// Aggregates the node-level shortest paths to cluster level. With TipChain a
/// cluster hangs below the same-tip cluster of the next bin toward the root; ties
/// between mean-shift subclusters go to the one on the root path, then to the
/// nearest median. The last cluster of each tip uses the path rule.
SkeletonGraph abstract_skeleton(const ClusterSet& clusters, const PathTree& tree,
                                const NodeMetrics& metrics, ParentRule rule = ParentRule::Path);

struct ThresholdResult {
  SkeletonGraph skeleton;
  std::vector<std::uint8_t> leaf;  // per graph node
};

/// Removes every skeleton node with freq < f_min together with its subtree.
ThresholdResult threshold_by_frequency(const SkeletonGraph& skeleton, const ClusterSet& clusters,
                                       double f_min);

struct SkeletonResult {
  PathTree paths;
  NodeMetrics metrics;
  std::vector<double> boundaries;
  ClusterSet clusters;
  SkeletonGraph skeleton;  // after thresholding
  std::vector<std::uint8_t> leaf;
};

/// Shortest paths through thresholding for one connected tree graph.
SkeletonResult skeletonize(const PointCloud& cloud, const HybridGraph& graph, NodeId root,
                           const RunConfig& cfg);

}  // namespace treegraph
