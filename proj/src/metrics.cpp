#include "treegraph/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

namespace treegraph {

std::vector<std::vector<NodeId>> PathTree::children() const {
  std::vector<std::vector<NodeId>> out(size());
  for (NodeId v = 0; v < size(); ++v)
    if (predecessor[v] != kNoNode) out[predecessor[v]].push_back(v);
  return out;
}

std::vector<NodeId> PathTree::terminals() const {
  std::vector<char> has_child(size(), 0);
  for (const NodeId p : predecessor)
    if (p != kNoNode) has_child[p] = 1;
  std::vector<NodeId> out;
  for (NodeId v = 0; v < size(); ++v)
    if (!has_child[v]) out.push_back(v);
  return out;
}

PathTree shortest_paths(const HybridGraph& graph, NodeId root) {
  const std::size_t n = graph.node_count();
  if (root >= n) throw GraphError("root out of range");
  PathTree t;
  t.root = root;
  t.distance.assign(n, std::numeric_limits<double>::infinity());
  t.predecessor.assign(n, kNoNode);
  t.order.reserve(n);
  std::vector<char> settled(n, 0);

  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  t.distance[root] = 0.0;
  heap.push({0.0, root});
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (settled[u] || d > t.distance[u]) continue;
    settled[u] = 1;
    t.order.push_back(u);
    for (const Incident& e : graph.neighbors(u)) {
      const NodeId v = e.node;
      if (settled[v]) continue;
      const double nd = d + e.w;
      if (nd < t.distance[v]) {
        t.distance[v] = nd;
        t.predecessor[v] = u;
        heap.push({nd, v});
      } else if (nd == t.distance[v] && u < t.predecessor[v]) {
        t.predecessor[v] = u;
      }
    }
  }
  if (t.order.size() != n) {
    NodeId missing = 0;
    while (settled[missing]) ++missing;
    throw GraphError("node " + std::to_string(missing) + " is unreachable from the root");
  }
  return t;
}

std::vector<std::uint32_t> path_frequency(const PathTree& tree) {
  std::vector<std::uint32_t> freq(tree.size(), 1);
  for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
    const NodeId p = tree.predecessor[*it];
    if (p != kNoNode) freq[p] += freq[*it];
  }
  return freq;
}

std::vector<std::uint32_t> correct_path_frequency(std::span<const std::uint32_t> freq_raw,
                                                  const PathTree& tree, const HybridGraph& graph,
                                                  FrequencyCorrection mode) {
  std::vector<std::uint32_t> out(freq_raw.begin(), freq_raw.end());
  for (const NodeId v : tree.order) {
    if (mode == FrequencyCorrection::Anomaly && freq_raw[v] != 0) continue;
    std::uint32_t best = 0;
    for (const Incident& e : graph.neighbors(v))
      if (tree.distance[e.node] < tree.distance[v]) best = std::max(best, out[e.node]);
    out[v] = std::max(out[v], best);
  }
  return out;
}

std::vector<NodeId> farthest_tip(const PathTree& tree) {
  std::vector<NodeId> tip(tree.size(), kNoNode);
  const auto& D = tree.distance;
  for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
    const NodeId v = *it;
    if (tip[v] == kNoNode) tip[v] = v;  // no child reported: terminal
    const NodeId p = tree.predecessor[v];
    if (p == kNoNode) continue;
    const NodeId cand = tip[v], cur = tip[p];
    if (cur == kNoNode || D[cand] > D[cur] || (D[cand] == D[cur] && cand < cur)) tip[p] = cand;
  }
  return tip;
}

std::vector<double> reverse_distance(std::span<const double> distance, std::span<const NodeId> tips) {
  std::vector<double> out(distance.size());
  for (std::size_t v = 0; v < distance.size(); ++v)
    out[v] = std::max(0.0, distance[tips[v]] - distance[v]);
  return out;
}

std::vector<NodeId> unify_tips_by_band(const HybridGraph& graph, std::span<const double> distance,
                                       std::span<const NodeId> tips, double width) {
  if (!(width > 0.0)) throw ConfigError("band width must be positive");
  const std::size_t n = graph.node_count();
  auto band = [&](NodeId v) { return static_cast<std::int64_t>(std::floor(distance[v] / width)); };
  UnionFind uf(n);
  for (const Edge& e : graph.edges())
    if (band(e.u) == band(e.v)) uf.unite(e.u, e.v);
  std::vector<NodeId> best(n, kNoNode);
  auto farther = [&](NodeId a, NodeId b) {
    if (b == kNoNode) return true;
    return distance[a] > distance[b] || (distance[a] == distance[b] && a < b);
  };
  for (NodeId v = 0; v < n; ++v) {
    const auto r = uf.find(v);
    if (farther(tips[v], best[r])) best[r] = tips[v];
  }
  std::vector<NodeId> out(n);
  for (NodeId v = 0; v < n; ++v) out[v] = best[uf.find(v)];
  return out;
}

std::vector<NodeId> absorb_short_tips(const PathTree& tree, std::span<const NodeId> tips,
                                      double min_length) {
  std::vector<NodeId> out(tips.begin(), tips.end());
  if (!(min_length > 0.0)) return out;
  for (const NodeId v : tree.order) {
    const NodeId p = tree.predecessor[v];
    if (p == kNoNode || out[v] == out[p]) continue;
    if (tree.distance[out[v]] - tree.distance[v] < min_length) out[v] = out[p];
  }
  return out;
}

double default_band_width(const HybridGraph& graph) {
  std::vector<double> w;
  w.reserve(graph.edge_count());
  for (const Edge& e : graph.edges()) w.push_back(e.w);
  if (w.empty()) return 1.0;
  auto mid = w.begin() + static_cast<std::ptrdiff_t>(w.size() / 2);
  std::nth_element(w.begin(), mid, w.end());
  return 5.0 * *mid;
}

NodeMetrics compute_metrics(const PathTree& tree, const HybridGraph& graph,
                            const MetricOptions& opts) {
  NodeMetrics m;
  m.freq_raw = path_frequency(tree);
  m.freq = correct_path_frequency(m.freq_raw, tree, graph, opts.correction);
  m.tip_subtree = farthest_tip(tree);
  if (opts.tip_mode == TipMode::Band && tree.size() > 1) {
    const double w = opts.band_width > 0.0 ? opts.band_width : default_band_width(graph);
    m.tip = unify_tips_by_band(graph, tree.distance, m.tip_subtree, w);
  } else {
    m.tip = m.tip_subtree;
  }
  m.tip = absorb_short_tips(tree, m.tip, opts.min_branch_length);
  m.reverse_distance = reverse_distance(tree.distance, m.tip);
  return m;
}

std::vector<double> step_size_vector(double lo, double hi, double alpha, int n_bins) {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (n_bins < 2) throw ConfigError("n_bins must be at least 2");
  if (!(hi >= lo)) throw ConfigError("step vector requires hi >= lo");
  if (hi == lo) return {lo};
  std::vector<double> d(static_cast<std::size_t>(n_bins));
  const double top = std::log10(alpha + 1.0);
  const double scale = (hi - lo) / alpha;
  for (int j = 0; j < n_bins; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(n_bins - 1) * top;
    d[j] = scale * (std::pow(10.0, t) - 1.0) + lo;
  }
  d.front() = lo;
  d.back() = hi;
  return d;
}

int bin_index(std::span<const double> boundaries, double value) {
  if (boundaries.size() < 2) return 0;
  const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), value);
  const auto j = static_cast<int>(it - boundaries.begin()) - 1;
  return std::clamp(j, 0, static_cast<int>(boundaries.size()) - 2);
}

}  // namespace treegraph
