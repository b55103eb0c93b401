#include "support.hpp"

#include "treegraph/graph.hpp"
#include "treegraph/kdtree.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

using namespace treegraph;

namespace {

using EdgeKey = std::pair<NodeId, NodeId>;

// O(n^2) kNN graph: each point selects its k nearest non-coincident points.
std::map<EdgeKey, double> brute_knn_edges(const PointCloud& c, int k) {
  std::map<EdgeKey, double> out;
  for (NodeId i = 0; i < c.size(); ++i) {
    std::vector<std::pair<double, NodeId>> cand;
    for (NodeId j = 0; j < c.size(); ++j) {
      const double d = (c.points[i] - c.points[j]).norm();
      if (j != i && d > 0.0) cand.emplace_back(d, j);
    }
    std::sort(cand.begin(), cand.end());
    for (int r = 0; r < k && r < static_cast<int>(cand.size()); ++r)
      out[{std::min(i, cand[r].second), std::max(i, cand[r].second)}] = cand[r].first;
  }
  return out;
}

std::map<EdgeKey, double> edge_map(const HybridGraph& g) {
  std::map<EdgeKey, double> out;
  for (const Edge& e : g.edges()) out[{e.u, e.v}] = e.w;
  return out;
}

// Labels by BFS, numbered in order of smallest member.
std::vector<std::uint32_t> bfs_labels(const HybridGraph& g) {
  std::vector<std::uint32_t> label(g.node_count(), ~0u);
  std::uint32_t next = 0;
  for (NodeId s = 0; s < g.node_count(); ++s) {
    if (label[s] != ~0u) continue;
    std::queue<NodeId> q;
    q.push(s);
    label[s] = next;
    while (!q.empty()) {
      const NodeId v = q.front();
      q.pop();
      for (const auto& nb : g.neighbors(v))
        if (label[nb.node] == ~0u) {
          label[nb.node] = next;
          q.push(nb.node);
        }
    }
    ++next;
  }
  return label;
}

}  // namespace

TEST_CASE("kd-tree knn and radius match a linear scan") {
  const PointCloud c = support::random_cloud(300, 11);
  const KdTree tree(c.points);
  const Vec3 q(5, 5, 5);
  std::vector<std::pair<double, NodeId>> all;
  for (NodeId j = 0; j < c.size(); ++j) all.emplace_back((c.points[j] - q).norm(), j);
  std::sort(all.begin(), all.end());
  const auto nn = tree.knn(q, 7);
  REQUIRE(nn.size() == 7);
  for (int r = 0; r < 7; ++r) CHECK(nn[r].id == all[r].second);
  const auto in = tree.radius(q, 2.0);
  const auto expected = std::count_if(all.begin(), all.end(), [](auto& p) { return p.first <= 2.0; });
  CHECK(static_cast<long>(in.size()) == expected);
}

TEST_CASE("two points with k=1 give one edge of their distance") {
  PointCloud c;
  c.points = {Vec3(0, 0, 0), Vec3(3, 4, 0)};
  const HybridGraph g = build_knn_graph(c, 1);
  REQUIRE(g.edge_count() == 1);
  CHECK(g.edges()[0].w == doctest::Approx(5.0));
}

TEST_CASE("collinear points at 1 m with k=1 form a chain") {
  PointCloud c;
  for (int i = 0; i < 4; ++i) c.points.emplace_back(i, 0, 0);
  const HybridGraph g = build_knn_graph(c, 1);
  REQUIRE(g.edge_count() == 3);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 2));
  CHECK(g.has_edge(2, 3));
}

TEST_CASE("knn graph equals the all-pairs oracle") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const PointCloud c = support::random_cloud(200, seed);
    for (const int k : {1, 5, 10}) CHECK(edge_map(build_knn_graph(c, k)) == brute_knn_edges(c, k));
  }
}

TEST_CASE("coincident points are not joined") {
  PointCloud c;
  c.points = {Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(1, 0, 0)};
  const HybridGraph g = build_knn_graph(c, 2);
  CHECK_FALSE(g.has_edge(0, 1));
  CHECK(g.has_edge(0, 2));
  CHECK(g.has_edge(1, 2));
}

TEST_CASE("graph construction rejects bad edges") {
  CHECK_THROWS_AS(HybridGraph(2, {{0, 0, 1.0}}), GraphError);
  CHECK_THROWS_AS(HybridGraph(2, {{0, 5, 1.0}}), GraphError);
  CHECK_THROWS_AS(HybridGraph(2, {{0, 1, 0.0}}), GraphError);
  CHECK_THROWS_AS(HybridGraph(2, {{0, 1, 1.0}, {0, 1, 2.0}}), GraphError);
}

TEST_CASE("dispersion threshold of [1,1,1,10] removes the long edge") {
  // star: center 0 with leaves 1..4
  const HybridGraph g(5, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {0, 4, 10.0}});
  const auto thr = dispersion_thresholds(g);
  CHECK(thr[0] == doctest::Approx(3.25 + std::sqrt(15.1875)).epsilon(1e-12));
  CHECK(thr[0] == doctest::Approx(7.147).epsilon(1e-3));
  const HybridGraph p = prune_dispersed_edges(g);
  CHECK(p.edge_count() == 3);
  CHECK_FALSE(p.has_edge(0, 4));
}

TEST_CASE("equal incident lengths are kept") {
  const HybridGraph g(4, {{0, 1, 2.0}, {0, 2, 2.0}, {0, 3, 2.0}});
  CHECK(prune_dispersed_edges(g).edge_count() == 3);
}

TEST_CASE("pruning equals a per-node recomputation") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const HybridGraph g = support::random_connected_graph(200, 400, seed, false);
    std::vector<std::vector<double>> inc(g.node_count());
    for (const Edge& e : g.edges()) {
      inc[e.u].push_back(e.w);
      inc[e.v].push_back(e.w);
    }
    std::vector<double> cut(g.node_count());
    for (std::size_t v = 0; v < inc.size(); ++v) {
      double s = 0, ss = 0;
      for (double w : inc[v]) s += w;
      const double mu = s / inc[v].size();
      for (double w : inc[v]) ss += (w - mu) * (w - mu);
      cut[v] = mu + std::sqrt(ss / inc[v].size());
    }
    std::map<EdgeKey, double> expected;
    for (const Edge& e : g.edges())
      if (!(e.w > cut[e.u]) && !(e.w > cut[e.v])) expected[{e.u, e.v}] = e.w;
    CHECK(edge_map(prune_dispersed_edges(g)) == expected);
  }
}

TEST_CASE("component labels") {
  CHECK(connected_components(HybridGraph(3, {})) == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(connected_components(HybridGraph(3, {{0, 1, 1.0}, {1, 2, 1.0}})) ==
        std::vector<std::uint32_t>{0, 0, 0});
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 2 + rng() % 49;
    std::vector<Edge> edges;
    std::set<EdgeKey> seen;
    for (std::size_t i = 0; i < n / 2; ++i) {
      const NodeId a = rng() % n, b = rng() % n;
      if (a != b && seen.insert({std::min(a, b), std::max(a, b)}).second)
        edges.push_back({std::min(a, b), std::max(a, b), 1.0});
    }
    const HybridGraph g(n, edges);
    CHECK(connected_components(g) == bfs_labels(g));
  }
}

TEST_CASE("repair leaves a connected graph unchanged") {
  PointCloud c;
  for (int i = 0; i < 4; ++i) c.points.emplace_back(i, 0, 0);
  const HybridGraph g = build_knn_graph(c, 1);
  std::vector<Edge> added;
  CHECK(edge_map(repair_connectivity(g, c, &added)) == edge_map(g));
  CHECK(added.empty());
}

TEST_CASE("two clusters 1 m apart get one 1 m bridge") {
  PointCloud c;
  for (int i = 0; i < 5; ++i) c.points.emplace_back(0.1 * i, 0, 0);
  for (int i = 0; i < 5; ++i) c.points.emplace_back(1.4 + 0.1 * i, 0, 0);
  std::vector<Edge> e;
  for (NodeId i = 0; i < 4; ++i) {
    e.push_back({i, i + 1, 0.1});
    e.push_back({i + 5, i + 6, 0.1});
  }
  const HybridGraph g(10, e);
  std::vector<Edge> added;
  const HybridGraph r = repair_connectivity(g, c, &added);
  REQUIRE(added.size() == 1);
  CHECK(added[0].u == 4);
  CHECK(added[0].v == 5);
  CHECK(added[0].w == doctest::Approx(1.0));
  CHECK(component_count(r) == 1);
}

TEST_CASE("five components need exactly four bridges") {
  PointCloud c;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int blob = 0; blob < 5; ++blob)
    for (int i = 0; i < 40; ++i) c.points.emplace_back(blob * 7.0 + u(rng), u(rng) + blob % 2, u(rng));
  const HybridGraph g = prune_dispersed_edges(build_knn_graph(c, 6));
  REQUIRE(component_count(g) >= 5);
  std::vector<Edge> added;
  const HybridGraph r = repair_connectivity(g, c, &added);
  CHECK(added.size() == component_count(g) - 1);
  const auto lab = bfs_labels(r);
  CHECK(std::all_of(lab.begin(), lab.end(), [](auto l) { return l == 0; }));
}

TEST_CASE("repair fails on components made of coincident points") {
  PointCloud c;
  c.points = {Vec3(0, 0, 0), Vec3(0, 0, 0)};
  CHECK_THROWS_AS((void)repair_connectivity(HybridGraph(2, {}), c), GraphError);
}

TEST_CASE("hybrid graph is connected") {
  const PointCloud c = support::random_cloud(500, 9);
  CHECK(component_count(build_hybrid_graph(c, 10)) == 1);
}
