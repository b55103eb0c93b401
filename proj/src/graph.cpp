#include "treegraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <string>
#include <tuple>

namespace treegraph {

HybridGraph::HybridGraph(std::size_t node_count, std::vector<Edge> edges)
    : n_(node_count), edges_(std::move(edges)) {
  for (const Edge& e : edges_) {
    if (e.u >= e.v) throw GraphError("edge endpoints must satisfy u < v");
    if (e.v >= n_) throw GraphError("edge endpoint out of range");
    if (!(e.w > 0.0) || !std::isfinite(e.w)) throw GraphError("edge weight must be positive");
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  for (std::size_t i = 1; i < edges_.size(); ++i)
    if (edges_[i].u == edges_[i - 1].u && edges_[i].v == edges_[i - 1].v)
      throw GraphError("duplicate edge " + std::to_string(edges_[i].u) + "-" +
                       std::to_string(edges_[i].v));

  offset_.assign(n_ + 1, 0);
  for (const Edge& e : edges_) {
    ++offset_[e.u + 1];
    ++offset_[e.v + 1];
  }
  std::partial_sum(offset_.begin(), offset_.end(), offset_.begin());
  adj_.resize(2 * edges_.size());
  std::vector<std::size_t> fill(offset_.begin(), offset_.end() - 1);
  for (std::uint32_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    adj_[fill[e.u]++] = {e.v, e.w, i};
    adj_[fill[e.v]++] = {e.u, e.w, i};
  }
  // edges are sorted by (u, v), so each row is already in ascending neighbor order
  // for the u side; sort rows to make the v side ascending as well
  for (std::size_t v = 0; v < n_; ++v)
    std::sort(adj_.begin() + offset_[v], adj_.begin() + offset_[v + 1],
              [](const Incident& a, const Incident& b) { return a.node < b.node; });
}

bool HybridGraph::has_edge(NodeId a, NodeId b) const {
  if (a >= n_ || b >= n_) return false;
  const auto row = neighbors(a);
  return std::binary_search(row.begin(), row.end(), Incident{b, 0.0, 0},
                            [](const Incident& x, const Incident& y) { return x.node < y.node; });
}

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n, 1), sets_(n) {
  std::iota(parent_.begin(), parent_.end(), NodeId{0});
}

NodeId UnionFind::find(NodeId x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool UnionFind::unite(NodeId a, NodeId b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b] || (size_[a] == size_[b] && a > b)) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  --sets_;
  return true;
}

namespace {

Edge make_edge(const PointCloud& cloud, NodeId a, NodeId b) {
  const NodeId u = std::min(a, b), v = std::max(a, b);
  return {u, v, (cloud.points[u] - cloud.points[v]).norm()};
}

}  // namespace

std::vector<std::vector<Neighbor>> knn_neighbors(const PointCloud& cloud, int k) {
  const std::size_t n = cloud.size();
  std::vector<std::vector<Neighbor>> out(n);
  if (n < 2 || k < 1) return out;
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n - 1);
  const KdTree tree(cloud.points);

#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const auto self = static_cast<NodeId>(i);
    // over-fetch a little so coincident points can be dropped
    std::size_t want = kk;
    std::vector<Neighbor> nb;
    for (;;) {
      nb = tree.knn(cloud.points[self], want, self);
      const auto zeros = static_cast<std::size_t>(
          std::count_if(nb.begin(), nb.end(), [](const Neighbor& x) { return x.dist <= 0.0; }));
      if (nb.size() - zeros >= kk || nb.size() < want || want == n - 1) break;
      want = std::min(n - 1, want + zeros);
    }
    std::erase_if(nb, [](const Neighbor& x) { return x.dist <= 0.0; });
    if (nb.size() > kk) nb.resize(kk);
    out[self] = std::move(nb);
  }
  return out;
}

HybridGraph build_knn_graph(const PointCloud& cloud, int k) {
  if (cloud.empty()) throw GraphError("cannot build a graph over an empty cloud");
  if (k < 1) throw GraphError("k must be at least 1");
  const auto nbrs = knn_neighbors(cloud, k);
  std::vector<Edge> edges;
  edges.reserve(cloud.size() * static_cast<std::size_t>(k));
  for (NodeId i = 0; i < nbrs.size(); ++i)
    for (const Neighbor& nb : nbrs[i]) edges.push_back(make_edge(cloud, i, nb.id));
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const Edge& a, const Edge& b) { return a.u == b.u && a.v == b.v; }),
              edges.end());
  return HybridGraph(cloud.size(), std::move(edges));
}

std::vector<double> dispersion_thresholds(const HybridGraph& graph) {
  const std::size_t n = graph.node_count();
  std::vector<double> cutoff(n, std::numeric_limits<double>::infinity());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const auto row = graph.neighbors(static_cast<NodeId>(i));
    if (row.size() < 2) continue;
    double sum = 0.0;
    for (const Incident& e : row) sum += e.w;
    const double mean = sum / static_cast<double>(row.size());
    double var = 0.0;
    for (const Incident& e : row) var += (e.w - mean) * (e.w - mean);
    var /= static_cast<double>(row.size());
    cutoff[i] = mean + std::sqrt(var);
  }
  return cutoff;
}

HybridGraph prune_dispersed_edges(const HybridGraph& graph) {
  const auto cutoff = dispersion_thresholds(graph);
  std::vector<Edge> kept;
  kept.reserve(graph.edge_count());
  for (const Edge& e : graph.edges())
    if (!(e.w > cutoff[e.u]) && !(e.w > cutoff[e.v])) kept.push_back(e);
  return HybridGraph(graph.node_count(), std::move(kept));
}

std::vector<std::uint32_t> connected_components(const HybridGraph& graph) {
  constexpr auto kUnset = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> label(graph.node_count(), kUnset);
  std::uint32_t next = 0;
  std::vector<NodeId> stack;
  for (NodeId s = 0; s < graph.node_count(); ++s) {
    if (label[s] != kUnset) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      for (const Incident& e : graph.neighbors(v))
        if (label[e.node] == kUnset) {
          label[e.node] = next;
          stack.push_back(e.node);
        }
    }
    ++next;
  }
  return label;
}

std::size_t component_count(const HybridGraph& graph) {
  const auto labels = connected_components(graph);
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

HybridGraph repair_connectivity(const HybridGraph& graph, const PointCloud& cloud,
                                std::vector<Edge>* added) {
  const std::size_t n = graph.node_count();
  if (cloud.size() != n) throw GraphError("graph and cloud sizes differ");
  std::vector<Edge> edges = graph.edges();
  if (added) added->clear();

  UnionFind uf(n);
  for (const Edge& e : graph.edges()) uf.unite(e.u, e.v);
  if (uf.set_count() <= 1) return graph;

  KdTree tree(cloud.points);
  constexpr std::size_t kPairsPerComponentPair = 5;

  while (uf.set_count() > 1) {
    std::vector<std::uint32_t> label(n);
    std::map<NodeId, std::uint32_t> sizes;
    for (NodeId i = 0; i < n; ++i) {
      label[i] = uf.find(i);
      ++sizes[label[i]];
    }
    tree.set_labels(label);
    // the largest component's outgoing candidates are found from the other side
    NodeId largest = sizes.begin()->first;
    for (const auto& [root, count] : sizes)
      if (count > sizes[largest]) largest = root;

    std::vector<Edge> found(n, Edge{kNoNode, kNoNode, 0.0});
#pragma omp parallel for schedule(dynamic, 256)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      const auto p = static_cast<NodeId>(i);
      if (label[p] == largest) continue;
      const Neighbor nb = tree.nearest_foreign(cloud.points[p], label[p]);
      if (nb.id != kNoNode) found[p] = make_edge(cloud, p, nb.id);
    }

    // keep the shortest few candidates for each component pair
    std::map<std::pair<NodeId, NodeId>, std::vector<Edge>> by_pair;
    for (const Edge& e : found) {
      if (e.u == kNoNode) continue;
      const NodeId a = label[e.u], b = label[e.v];
      by_pair[{std::min(a, b), std::max(a, b)}].push_back(e);
    }
    auto shorter = [](const Edge& a, const Edge& b) {
      return std::tie(a.w, a.u, a.v) < std::tie(b.w, b.u, b.v);
    };
    std::vector<Edge> pool;
    for (auto& [key, list] : by_pair) {
      std::sort(list.begin(), list.end(), shorter);
      list.erase(std::unique(list.begin(), list.end(),
                             [](const Edge& a, const Edge& b) { return a.u == b.u && a.v == b.v; }),
                 list.end());
      if (list.size() > kPairsPerComponentPair) list.resize(kPairsPerComponentPair);
      pool.insert(pool.end(), list.begin(), list.end());
    }
    std::sort(pool.begin(), pool.end(), shorter);

    std::size_t joined = 0;
    for (const Edge& e : pool) {
      if (uf.unite(e.u, e.v)) {
        edges.push_back(e);
        if (added) added->push_back(e);
        ++joined;
      }
    }
    if (joined == 0) {
      NodeId unreached = kNoNode;
      for (NodeId i = 0; i < n && unreached == kNoNode; ++i)
        if (label[i] != largest) unreached = i;
      throw GraphError("cannot connect the component containing node " +
                       std::to_string(unreached) + ": all of its points coincide with others");
    }
  }
  return HybridGraph(n, std::move(edges));
}

HybridGraph build_hybrid_graph(const PointCloud& cloud, int k) {
  return repair_connectivity(prune_dispersed_edges(build_knn_graph(cloud, k)), cloud);
}

}  // namespace treegraph
