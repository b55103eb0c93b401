#pragma once

#include "treegraph/config.hpp"
#include "treegraph/graph.hpp"
#include "treegraph/types.hpp"

#include <span>
#include <vector>

namespace treegraph {

/// One partition of the scene graph: the member points of a single tree (or
/// an understory cluster) with the induced edges in local member indices.
struct TreeSubgraph {
  int tree_id = 0;
  std::vector<NodeId> members;  // global point indices, ascending
  NodeId root = kNoNode;        // global index of the lowest member
  bool is_tree = true;
  HybridGraph graph;            // local indices into `members`

  [[nodiscard]] NodeId local_root() const;
};

/// For every node, the local minimum its descent ends in. In steepest
/// descent mode a node follows its lowest strictly-lower neighbor; in
/// lowest-root mode it takes the lowest minimum reachable through any
/// strictly-lower neighbor. Equal-z neighbors never propagate; z ties in the
/// processing order are broken by index.
std::vector<NodeId> lowest_reachable(const HybridGraph& graph, const PointCloud& cloud,
                                     PathingMode mode = PathingMode::LowestRoot);

/// Partitions the graph into subgraphs by lowest reachable node, merging
/// groups whose minima lie within `merge_distance` of each other. Subgraphs
/// are ordered by root index and numbered from 0.
std::vector<TreeSubgraph> graph_pathing(const HybridGraph& graph, const PointCloud& cloud,
                                        double merge_distance,
                                        PathingMode mode = PathingMode::LowestRoot);

/// Merges every subgraph whose root lies at least `attach_height` above the
/// root of a neighboring subgraph into the lowest-rooted such neighbor with
/// the most shared edges (crown pieces that drain to their own minimum).
/// Groups are visited by ascending root, so chains of pieces collapse.
/// The result is renumbered like graph_pathing output.
std::vector<TreeSubgraph> reattach_fragments(const std::vector<TreeSubgraph>& subgraphs,
                                             const HybridGraph& graph, const PointCloud& cloud,
                                             double attach_height);

/// Flags subgraphs that are shorter than `min_tree_height` or have fewer
/// than `min_tree_points` members as understory.
void filter_understory(std::vector<TreeSubgraph>& subgraphs, const PointCloud& cloud,
                       double min_tree_height, int min_tree_points);

/// Reconnects a subgraph that was split by the partition.
TreeSubgraph repair_subgraph(TreeSubgraph subgraph, const PointCloud& cloud);

/// Full segmentation: pathing, fragment reattachment, understory filter and
/// per-subgraph repair. Pathing ignores `bridges` (the edges added by
/// connectivity repair), so a detached piece cannot drain into a neighbor
/// through a repair edge; reattachment and induced edges use all of `graph`.
std::vector<TreeSubgraph> segment_trees(const HybridGraph& graph, const PointCloud& cloud,
                                        const RunConfig& cfg, std::span<const Edge> bridges = {});

/// Per-point tree id (-1 for understory) for export.
std::vector<int> tree_labels(const std::vector<TreeSubgraph>& subgraphs, std::size_t point_count);

}  // namespace treegraph
