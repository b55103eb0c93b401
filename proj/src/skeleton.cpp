#include "treegraph/skeleton.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>
#include <tuple>

namespace treegraph {

std::vector<std::vector<std::uint32_t>> SkeletonGraph::children() const {
  std::vector<std::vector<std::uint32_t>> out(nodes.size());
  for (std::uint32_t v = 0; v < nodes.size(); ++v)
    if (nodes[v].parent != kNoNode) out[nodes[v].parent].push_back(v);
  return out;
}

double SkeletonGraph::edge_length(std::uint32_t node) const {
  const auto p = nodes[node].parent;
  return p == kNoNode ? 0.0 : (nodes[node].pos - nodes[p].pos).norm();
}

std::vector<std::uint32_t> SkeletonGraph::topological_order() const {
  const auto kids = children();
  std::vector<std::uint32_t> order;
  order.reserve(nodes.size());
  if (nodes.empty()) return order;
  order.push_back(root);
  for (std::size_t i = 0; i < order.size(); ++i)
    for (const auto c : kids[order[i]]) order.push_back(c);
  return order;
}

void SkeletonGraph::validate() const {
  if (nodes.empty()) throw SkeletonError("skeleton has no nodes");
  if (root >= nodes.size()) throw SkeletonError("skeleton root out of range");
  std::vector<std::uint32_t> roots;
  for (std::uint32_t v = 0; v < nodes.size(); ++v) {
    if (nodes[v].parent == kNoNode) roots.push_back(v);
    else if (nodes[v].parent >= nodes.size())
      throw SkeletonError("skeleton node " + std::to_string(v) + " has an invalid parent");
  }
  if (roots.size() != 1 || roots.front() != root) {
    std::string ids;
    for (const auto r : roots) ids += " " + std::to_string(r);
    throw SkeletonError("skeleton must have exactly one root; parentless nodes:" + ids);
  }
  if (topological_order().size() != nodes.size()) {
    // nodes not reachable from the root sit on a parent cycle
    std::vector<char> seen(nodes.size(), 0);
    for (const auto v : topological_order()) seen[v] = 1;
    std::string ids;
    for (std::uint32_t v = 0; v < nodes.size(); ++v)
      if (!seen[v]) ids += " " + std::to_string(v);
    throw SkeletonError("skeleton parent links form a cycle among nodes:" + ids);
  }
}

SkeletonGraph abstract_skeleton(const ClusterSet& clusters, const PathTree& tree,
                                const NodeMetrics& metrics, ParentRule rule) {
  const auto& cs = clusters.clusters;
  SkeletonGraph sk;
  sk.nodes.resize(cs.size());
  sk.root = clusters.cluster_of[tree.root];

  const auto& D = tree.distance;
  // same-key subclusters (from mean shift) may only hang below a subcluster
  // whose representative is closer to the root
  auto closer = [&](std::uint32_t a, std::uint32_t b) {
    const NodeId ra = cs[a].representative, rb = cs[b].representative;
    return std::make_tuple(D[ra], ra) < std::make_tuple(D[rb], rb);
  };

  // per tip: clusters sorted by bin
  std::map<NodeId, std::vector<std::pair<int, std::uint32_t>>> by_tip;
  if (rule == ParentRule::TipChain)
    for (std::uint32_t c = 0; c < cs.size(); ++c) by_tip[cs[c].tip].emplace_back(cs[c].bin, c);
  for (auto& [t, list] : by_tip) std::sort(list.begin(), list.end());

  auto chain_parent = [&](std::uint32_t c) -> std::uint32_t {
    const auto& list = by_tip.at(cs[c].tip);
    auto it = std::upper_bound(list.begin(), list.end(),
                               std::make_pair(cs[c].bin, std::numeric_limits<std::uint32_t>::max()));
    if (it == list.end()) return kNoNode;
    const int next_bin = it->first;
    std::vector<std::uint32_t> cand;
    for (; it != list.end() && it->first == next_bin; ++it) cand.push_back(it->second);
    if (cand.size() == 1) return cand.front();
    for (NodeId x = tree.predecessor[cs[c].representative]; x != kNoNode; x = tree.predecessor[x])
      if (std::find(cand.begin(), cand.end(), clusters.cluster_of[x]) != cand.end())
        return clusters.cluster_of[x];
    std::uint32_t best = cand.front();
    for (const auto k : cand)
      if ((cs[k].median - cs[c].median).squaredNorm() < (cs[best].median - cs[c].median).squaredNorm())
        best = k;
    return best;
  };

  for (std::uint32_t c = 0; c < cs.size(); ++c) {
    SkeletonNode& node = sk.nodes[c];
    node.pos = cs[c].median;
    node.cluster = c;
    node.cluster_size = static_cast<std::uint32_t>(cs[c].members.size());
    node.freq = 0;
    for (const NodeId m : cs[c].members) node.freq = std::max(node.freq, metrics.freq[m]);
    if (c == sk.root) continue;
    if (rule == ParentRule::TipChain) {
      node.parent = chain_parent(c);
      if (node.parent != kNoNode) continue;
    }

    std::uint32_t prev = c;
    for (NodeId x = tree.predecessor[cs[c].representative]; x != kNoNode;
         x = tree.predecessor[x]) {
      const auto cx = clusters.cluster_of[x];
      if (cx == prev) continue;
      prev = cx;
      const bool same_key = cs[cx].tip == cs[c].tip && cs[cx].bin == cs[c].bin;
      if (cx == sk.root || !same_key || closer(cx, c)) {
        node.parent = cx;
        break;
      }
    }
    if (node.parent == kNoNode)
      throw SkeletonError("cluster " + std::to_string(c) + " has no path to the root cluster");
  }
  sk.validate();
  return sk;
}

ThresholdResult threshold_by_frequency(const SkeletonGraph& skeleton, const ClusterSet& clusters,
                                       double f_min) {
  skeleton.validate();
  const auto& root = skeleton.nodes[skeleton.root];
  if (f_min > static_cast<double>(root.freq))
    throw SkeletonError("frequency threshold " + std::to_string(f_min) +
                        " exceeds the root frequency " + std::to_string(root.freq));

  std::vector<char> removed(skeleton.size(), 0);
  for (const auto v : skeleton.topological_order()) {
    if (v == skeleton.root) continue;
    removed[v] = removed[skeleton.nodes[v].parent] ||
                 static_cast<double>(skeleton.nodes[v].freq) < f_min;
  }
  std::vector<std::uint32_t> remap(skeleton.size(), kNoNode);
  ThresholdResult out;
  for (std::uint32_t v = 0; v < skeleton.size(); ++v)
    if (!removed[v]) {
      remap[v] = static_cast<std::uint32_t>(out.skeleton.nodes.size());
      out.skeleton.nodes.push_back(skeleton.nodes[v]);
    }
  for (auto& node : out.skeleton.nodes)
    if (node.parent != kNoNode) node.parent = remap[node.parent];
  out.skeleton.root = remap[skeleton.root];

  std::vector<char> cluster_removed(clusters.clusters.size(), 1);
  for (std::uint32_t v = 0; v < skeleton.size(); ++v)
    if (!removed[v] && skeleton.nodes[v].cluster < cluster_removed.size())
      cluster_removed[skeleton.nodes[v].cluster] = 0;
  out.leaf.resize(clusters.cluster_of.size());
  for (std::size_t i = 0; i < out.leaf.size(); ++i)
    out.leaf[i] = cluster_removed[clusters.cluster_of[i]] ? 1 : 0;
  return out;
}

SkeletonResult skeletonize(const PointCloud& cloud, const HybridGraph& graph, NodeId root,
                           const RunConfig& cfg) {
  SkeletonResult r;
  r.paths = shortest_paths(graph, root);
  r.metrics = compute_metrics(r.paths, graph, {cfg.freq_correction, cfg.tip_mode, cfg.band_width, cfg.min_branch_length});
  const auto [lo, hi] =
      std::minmax_element(r.metrics.reverse_distance.begin(), r.metrics.reverse_distance.end());
  r.boundaries = step_size_vector(*lo, *hi, cfg.alpha, cfg.n_bins);
  r.clusters = adaptive_cluster(cloud, r.metrics, r.boundaries, cfg.leaf_on);
  const SkeletonGraph full = abstract_skeleton(r.clusters, r.paths, r.metrics, cfg.parent_rule);
  auto pruned = threshold_by_frequency(full, r.clusters, cfg.freq_threshold);
  r.skeleton = std::move(pruned.skeleton);
  r.leaf = std::move(pruned.leaf);
  return r;
}

}  // namespace treegraph
