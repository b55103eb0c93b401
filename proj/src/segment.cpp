#include "treegraph/segment.hpp"

#include "treegraph/kdtree.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

namespace treegraph {

NodeId TreeSubgraph::local_root() const {
  const auto it = std::lower_bound(members.begin(), members.end(), root);
  if (it == members.end() || *it != root) throw GraphError("subgraph root is not a member");
  return static_cast<NodeId>(it - members.begin());
}

std::vector<NodeId> lowest_reachable(const HybridGraph& graph, const PointCloud& cloud,
                                     PathingMode mode) {
  const std::size_t n = graph.node_count();
  const auto z = [&](NodeId i) { return cloud.points[i].z(); };
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return z(a) < z(b) || (z(a) == z(b) && a < b);
  });

  std::vector<NodeId> lowest(n, kNoNode);
  for (const NodeId v : order) {
    NodeId via = kNoNode;
    for (const Incident& e : graph.neighbors(v)) {
      const NodeId u = e.node;
      if (!(z(u) < z(v))) continue;
      if (via == kNoNode) {
        via = u;
        continue;
      }
      if (mode == PathingMode::SteepestDescent) {
        if (std::make_tuple(z(u), u) < std::make_tuple(z(via), via)) via = u;
      } else {
        const NodeId a = lowest[u], b = lowest[via];
        if (std::make_tuple(z(a), a, u) < std::make_tuple(z(b), b, via)) via = u;
      }
    }
    lowest[v] = (via == kNoNode) ? v : lowest[via];
  }
  return lowest;
}

namespace {

bool z_less(const PointCloud& cloud, NodeId a, NodeId b) {
  const double za = cloud.points[a].z(), zb = cloud.points[b].z();
  return za < zb || (za == zb && a < b);
}

// Subgraphs from a per-node group key, ordered by root and numbered from 0,
// with the induced edges of `graph`.
std::vector<TreeSubgraph> assemble(const HybridGraph& graph, const PointCloud& cloud,
                                   const std::vector<NodeId>& key) {
  const std::size_t n = graph.node_count();
  std::map<NodeId, std::vector<NodeId>> groups;
  for (NodeId v = 0; v < n; ++v) groups[key[v]].push_back(v);

  std::vector<TreeSubgraph> out;
  out.reserve(groups.size());
  for (auto& [k, members] : groups) {
    TreeSubgraph sg;
    sg.members = std::move(members);  // ascending by construction
    sg.root = *std::min_element(sg.members.begin(), sg.members.end(),
                                [&](NodeId a, NodeId b) { return z_less(cloud, a, b); });
    out.push_back(std::move(sg));
  }
  std::sort(out.begin(), out.end(),
            [](const TreeSubgraph& a, const TreeSubgraph& b) { return a.root < b.root; });

  std::vector<std::int64_t> local(n, -1);
  for (std::size_t g = 0; g < out.size(); ++g) {
    out[g].tree_id = static_cast<int>(g);
    for (std::size_t i = 0; i < out[g].members.size(); ++i)
      local[out[g].members[i]] = static_cast<std::int64_t>(g) << 32 | static_cast<std::int64_t>(i);
  }
  std::vector<std::vector<Edge>> induced(out.size());
  for (const Edge& e : graph.edges()) {
    const auto gu = local[e.u] >> 32, gv = local[e.v] >> 32;
    if (gu != gv) continue;
    const auto lu = static_cast<NodeId>(local[e.u] & 0xffffffff);
    const auto lv = static_cast<NodeId>(local[e.v] & 0xffffffff);
    induced[gu].push_back({std::min(lu, lv), std::max(lu, lv), e.w});
  }
  for (std::size_t g = 0; g < out.size(); ++g)
    out[g].graph = HybridGraph(out[g].members.size(), std::move(induced[g]));
  return out;
}

HybridGraph without_edges(const HybridGraph& graph, std::span<const Edge> removed) {
  if (removed.empty()) return graph;
  std::vector<std::pair<NodeId, NodeId>> drop;
  for (const Edge& e : removed) drop.emplace_back(std::min(e.u, e.v), std::max(e.u, e.v));
  std::sort(drop.begin(), drop.end());
  std::vector<Edge> kept;
  for (const Edge& e : graph.edges())
    if (!std::binary_search(drop.begin(), drop.end(), std::make_pair(e.u, e.v))) kept.push_back(e);
  return HybridGraph(graph.node_count(), std::move(kept));
}

}  // namespace

std::vector<TreeSubgraph> graph_pathing(const HybridGraph& graph, const PointCloud& cloud,
                                        double merge_distance, PathingMode mode) {
  const std::size_t n = graph.node_count();
  const auto lowest = lowest_reachable(graph, cloud, mode);

  std::vector<NodeId> minima;
  for (NodeId v = 0; v < n; ++v)
    if (lowest[v] == v) minima.push_back(v);

  // unify minima closer than merge_distance
  std::vector<Vec3> minima_pos;
  minima_pos.reserve(minima.size());
  for (const NodeId m : minima) minima_pos.push_back(cloud.points[m]);
  UnionFind uf(minima.size());
  if (merge_distance > 0.0) {
    const KdTree tree(minima_pos);
    for (NodeId i = 0; i < minima.size(); ++i)
      for (const Neighbor& nb : tree.radius(minima_pos[i], merge_distance))
        if (nb.id != i) uf.unite(i, nb.id);
  }
  std::vector<NodeId> minimum_slot(n, kNoNode);
  for (NodeId i = 0; i < minima.size(); ++i) minimum_slot[minima[i]] = i;

  std::vector<NodeId> key(n);
  for (NodeId v = 0; v < n; ++v) key[v] = uf.find(minimum_slot[lowest[v]]);
  return assemble(graph, cloud, key);
}

std::vector<TreeSubgraph> reattach_fragments(const std::vector<TreeSubgraph>& subgraphs,
                                             const HybridGraph& graph, const PointCloud& cloud,
                                             double attach_height) {
  const std::size_t n = graph.node_count();
  const std::size_t m = subgraphs.size();
  std::vector<std::uint32_t> group(n, 0);
  for (std::uint32_t g = 0; g < m; ++g)
    for (const NodeId v : subgraphs[g].members) group[v] = g;

  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> shared;
  for (const Edge& e : graph.edges())
    if (group[e.u] != group[e.v]) {
      ++shared[{group[e.u], group[e.v]}];
      ++shared[{group[e.v], group[e.u]}];
    }

  std::vector<std::uint32_t> order(m);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return z_less(cloud, subgraphs[a].root, subgraphs[b].root);
  });
  const auto root_z = [&](std::uint32_t g) { return cloud.points[subgraphs[g].root].z(); };

  // lower groups are final before any higher group looks at them
  std::vector<std::uint32_t> target(m);
  std::iota(target.begin(), target.end(), 0u);
  for (const std::uint32_t g : order) {
    std::uint32_t best = g;
    std::size_t best_count = 0;
    for (auto it = shared.lower_bound({g, 0}); it != shared.end() && it->first.first == g; ++it) {
      const std::uint32_t h = it->first.second;
      if (!(root_z(h) <= root_z(g) - attach_height)) continue;
      if (it->second > best_count) {
        best = h;
        best_count = it->second;
      }
    }
    target[g] = best == g ? g : target[best];
  }

  std::vector<NodeId> key(n);
  for (NodeId v = 0; v < n; ++v) key[v] = target[group[v]];
  return assemble(graph, cloud, key);
}

void filter_understory(std::vector<TreeSubgraph>& subgraphs, const PointCloud& cloud,
                       double min_tree_height, int min_tree_points) {
  for (TreeSubgraph& sg : subgraphs) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const NodeId m : sg.members) {
      lo = std::min(lo, cloud.points[m].z());
      hi = std::max(hi, cloud.points[m].z());
    }
    sg.is_tree = (hi - lo) >= min_tree_height &&
                 sg.members.size() >= static_cast<std::size_t>(std::max(0, min_tree_points));
  }
}

TreeSubgraph repair_subgraph(TreeSubgraph subgraph, const PointCloud& cloud) {
  const PointCloud local = cloud.subset(subgraph.members);
  subgraph.graph = repair_connectivity(subgraph.graph, local);
  return subgraph;
}

std::vector<TreeSubgraph> segment_trees(const HybridGraph& graph, const PointCloud& cloud,
                                        const RunConfig& cfg, std::span<const Edge> bridges) {
  auto subgraphs =
      graph_pathing(without_edges(graph, bridges), cloud, cfg.merge_distance, cfg.pathing);
  if (cfg.attach_height > 0.0) subgraphs = reattach_fragments(subgraphs, graph, cloud, cfg.attach_height);
  filter_understory(subgraphs, cloud, cfg.min_tree_height, cfg.min_tree_points);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(subgraphs.size()); ++i)
    subgraphs[i] = repair_subgraph(std::move(subgraphs[i]), cloud);
  return subgraphs;
}

std::vector<int> tree_labels(const std::vector<TreeSubgraph>& subgraphs, std::size_t point_count) {
  std::vector<int> labels(point_count, -1);
  for (const TreeSubgraph& sg : subgraphs)
    if (sg.is_tree)
      for (const NodeId m : sg.members) labels[m] = sg.tree_id;
  return labels;
}

}  // namespace treegraph
