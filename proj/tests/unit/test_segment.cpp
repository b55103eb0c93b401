#include "support.hpp"

#include "treegraph/pipeline.hpp"
#include "treegraph/segment.hpp"
#include "treegraph/synth.hpp"

#include <doctest.h>

#include <map>
#include <numeric>

using namespace treegraph;

namespace {

HybridGraph chain_graph(const PointCloud& c) {
  std::vector<Edge> e;
  for (NodeId i = 0; i + 1 < c.size(); ++i)
    e.push_back({i, i + 1, (c.points[i] - c.points[i + 1]).norm()});
  return HybridGraph(c.size(), e);
}

PointCloud z_chain(std::initializer_list<double> zs) {
  PointCloud c;
  double x = 0;
  for (double z : zs) c.points.emplace_back(x++, 0, z);
  return c;
}

}  // namespace

TEST_CASE("descending chain is one subgraph rooted at the bottom") {
  const PointCloud c = z_chain({5, 4, 3, 2, 1, 0});
  const auto sg = graph_pathing(chain_graph(c), c, 0.0);
  REQUIRE(sg.size() == 1);
  CHECK(sg[0].members.size() == 6);
  CHECK(sg[0].root == 5);
  CHECK(sg[0].local_root() == 5);
}

TEST_CASE("chain with a dip keeps the dip as its own minimum") {
  const PointCloud c = z_chain({0, 1, 2, 1.5, 3});
  const auto lowest = lowest_reachable(chain_graph(c), c);
  CHECK(lowest == std::vector<NodeId>{0, 0, 0, 3, 3});
  const auto sg = graph_pathing(chain_graph(c), c, 0.0);
  REQUIRE(sg.size() == 2);
  CHECK(sg[0].members == std::vector<NodeId>{0, 1, 2});
  CHECK(sg[1].members == std::vector<NodeId>{3, 4});
  CHECK(sg[1].root == 3);
}

TEST_CASE("two stems joined by one canopy edge stay apart") {
  PointCloud c;
  for (int s = 0; s < 2; ++s)
    for (int i = 0; i < 10; ++i) c.points.emplace_back(5.0 * s, 0, i);
  std::vector<Edge> e;
  for (NodeId s = 0; s < 2; ++s)
    for (NodeId i = 0; i < 9; ++i) e.push_back({10 * s + i, 10 * s + i + 1, 1.0});
  e.push_back({9, 19, 5.0});
  const HybridGraph g(20, e);
  const auto sg = graph_pathing(g, c, 0.5);
  REQUIRE(sg.size() == 2);
  CHECK(sg[0].root == 0);
  CHECK(sg[1].root == 10);
  CHECK(sg[0].members.size() == 10);
  CHECK(sg[0].graph.edge_count() == 9);
  for (const auto mode : {PathingMode::SteepestDescent, PathingMode::LowestRoot})
    CHECK(graph_pathing(g, c, 0.5, mode).size() == 2);
}

TEST_CASE("nearby minima merge") {
  PointCloud c;
  c.points = {Vec3(0, 0, 0), Vec3(0.2, 0, 0.01), Vec3(0.1, 0, 1)};
  const HybridGraph g(3, {{0, 2, 1.0}, {1, 2, 1.0}});
  CHECK(graph_pathing(g, c, 0.0).size() == 2);
  const auto merged = graph_pathing(g, c, 0.5);
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].root == 0);
}

TEST_CASE("pathing partitions every node exactly once") {
  const PointCloud c = support::random_cloud(400, 2);
  const HybridGraph g = build_hybrid_graph(c, 6);
  const auto sg = graph_pathing(g, c, 0.3);
  std::vector<int> seen(c.size(), 0);
  for (std::size_t i = 0; i < sg.size(); ++i) {
    CHECK(sg[i].tree_id == static_cast<int>(i));
    for (NodeId m : sg[i].members) {
      ++seen[m];
      CHECK(c.points[m].z() >= c.points[sg[i].root].z());
    }
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
}

TEST_CASE("high fragment reattaches to the lower neighbor") {
  // stem 0..4 (z 0..4), fragment 5..7 whose own minimum is at z 3
  PointCloud c;
  for (int i = 0; i < 5; ++i) c.points.emplace_back(0, 0, i);
  c.points.emplace_back(1, 0, 3.0);
  c.points.emplace_back(1, 0, 3.5);
  c.points.emplace_back(1, 0, 4.0);
  const HybridGraph g(8, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 4, 1}, {5, 6, 0.5}, {6, 7, 0.5}, {4, 7, 1}});
  const auto parts = graph_pathing(HybridGraph(8, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 4, 1}, {5, 6, 0.5}, {6, 7, 0.5}}), c, 0.0);
  REQUIRE(parts.size() == 2);
  CHECK(reattach_fragments(parts, g, c, 2.0).size() == 1);
  CHECK(reattach_fragments(parts, g, c, 3.5).size() == 2);
}

TEST_CASE("understory filter") {
  PointCloud c;
  for (int i = 0; i < 10; ++i) c.points.emplace_back(0, 0, 0.05 * i);  // 0.45 m shrub
  for (int i = 0; i < 10; ++i) c.points.emplace_back(5, 0, i / 3.0);    // exactly 3 m
  std::vector<TreeSubgraph> sg(2);
  for (NodeId i = 0; i < 10; ++i) {
    sg[0].members.push_back(i);
    sg[1].members.push_back(10 + i);
  }
  filter_understory(sg, c, 3.0, 5);
  CHECK_FALSE(sg[0].is_tree);
  CHECK(sg[1].is_tree);
  filter_understory(sg, c, 3.0, 11);
  CHECK_FALSE(sg[1].is_tree);
}

TEST_CASE("repair_subgraph") {
  PointCloud c;
  for (int i = 0; i < 6; ++i) c.points.emplace_back(0, 0, i < 3 ? i : i + 1);
  TreeSubgraph sg;
  sg.members = {0, 1, 2, 3, 4, 5};
  sg.root = 0;
  sg.graph = HybridGraph(6, {{0, 1, 1}, {1, 2, 1}, {3, 4, 1}, {4, 5, 1}});
  const auto fixed = repair_subgraph(sg, c);
  CHECK(fixed.graph.edge_count() == 5);
  CHECK(fixed.graph.has_edge(2, 3));
  CHECK(fixed.root == 0);

  sg.graph = HybridGraph(6, {{0, 1, 1}, {1, 2, 1}, {2, 3, 2}, {3, 4, 1}, {4, 5, 1}});
  CHECK(repair_subgraph(sg, c).graph.edges() == sg.graph.edges());
}

TEST_CASE("a crown cut from its stem is reconnected with its root kept") {
  auto t = generate_tree(TreeParams{}, 5);
  sample_surface(t, SamplingParams{.density = 300.0}, 5);
  TreeSubgraph sg;
  sg.members.resize(t.cloud.size());
  std::iota(sg.members.begin(), sg.members.end(), NodeId{0});
  sg.root = lowest_point(t.cloud);
  const HybridGraph full = build_hybrid_graph(t.cloud, 10);
  std::vector<Edge> kept;
  for (const Edge& e : full.edges())
    if ((t.cloud.points[e.u].z() < 4.0) == (t.cloud.points[e.v].z() < 4.0)) kept.push_back(e);
  sg.graph = HybridGraph(t.cloud.size(), kept);
  REQUIRE(component_count(sg.graph) > 1);
  const auto fixed = repair_subgraph(sg, t.cloud);
  CHECK(component_count(fixed.graph) == 1);
  CHECK(fixed.root == lowest_point(t.cloud));
}

TEST_CASE("segment_cloud recovers a small synthetic plot") {
  SceneParams sp;
  sp.n_trees = 3;
  sp.sampling.density = 400.0;
  const Scene scene = generate_scene(sp, 3);
  RunConfig cfg;
  cfg.min_tree_points = 500;
  const Segmentation seg = segment_cloud(scene.cloud, cfg);
  int trees = 0;
  for (const auto& s : seg.subgraphs) trees += s.is_tree;
  CHECK(trees == 3);
  // trees are numbered first and densely
  for (int i = 0; i < trees; ++i) CHECK(seg.subgraphs[i].is_tree);

  // majority truth label per predicted tree
  std::size_t agree = 0, labeled = 0;
  std::map<int, std::map<int, std::size_t>> votes;
  for (std::size_t i = 0; i < scene.cloud.size(); ++i)
    if (seg.labels[i] >= 0) ++votes[seg.labels[i]][scene.labels[i].tree_id];
  for (const auto& [pred, v] : votes) {
    std::size_t best = 0, total = 0;
    for (const auto& [truth, n] : v) {
      best = std::max(best, n);
      total += n;
    }
    agree += best;
    labeled += total;
  }
  CHECK(double(agree) / double(labeled) >= 0.95);
}

TEST_CASE("tree_labels marks understory with -1") {
  std::vector<TreeSubgraph> sg(2);
  sg[0].members = {0, 2};
  sg[0].tree_id = 0;
  sg[1].members = {1};
  sg[1].tree_id = 1;
  sg[1].is_tree = false;
  CHECK(tree_labels(sg, 3) == std::vector<int>{0, -1, 0});
}
