#include "support.hpp"

#include <Eigen/Geometry>

#include "treegraph/model.hpp"
#include "treegraph/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace treegraph;
using std::numbers::pi;

namespace {

PointCloud cylinder_points(double r, double height, int n, std::uint64_t seed, double noise = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd(0.0, noise > 0 ? noise : 1.0);
  PointCloud c;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * pi * u(rng), rr = r + (noise > 0 ? nd(rng) : 0.0);
    c.points.emplace_back(rr * std::cos(a), rr * std::sin(a), height * u(rng));
  }
  return c;
}

SkeletonGraph skeleton_of(std::vector<std::pair<Vec3, std::uint32_t>> nodes) {
  SkeletonGraph sk;
  for (auto& [p, parent] : nodes) {
    SkeletonNode n;
    n.pos = p;
    n.parent = parent;
    sk.nodes.push_back(n);
  }
  sk.validate();
  return sk;
}

// Independent frustum sum.
double frusta(const SkeletonGraph& sk) {
  double v = 0;
  for (const auto& n : sk.nodes) {
    if (n.parent == kNoNode) continue;
    const auto& p = sk.nodes[n.parent];
    const double h = (n.pos - p.pos).norm(), R = p.radius, r = n.radius;
    v += pi * h / 3.0 * (R * R + R * r + r * r);
  }
  return v;
}

}  // namespace

TEST_CASE("algebraic circle through three points") {
  const std::vector<Vec2> p{Vec2(1, 0), Vec2(-1, 0), Vec2(0, 1)};
  const auto c = fit_circle_algebraic(p);
  REQUIRE(c);
  CHECK(c->radius == doctest::Approx(1.0));
  CHECK(c->center.norm() < 1e-12);
  CHECK_FALSE(fit_circle_algebraic(std::vector<Vec2>{Vec2(0, 0), Vec2(1, 1), Vec2(2, 2)}));
}

TEST_CASE("dbh of a dense cylinder") {
  const PointCloud c = cylinder_points(0.15, 3.0, 20000, 1, 0.002);
  CHECK(estimate_dbh(c) == doctest::Approx(0.30).epsilon(0.01));
}

TEST_CASE("cropped stem raises MissingTrunk") {
  PointCloud c = cylinder_points(0.15, 6.0, 5000, 2);
  PointCloud top;
  for (const Vec3& p : c.points)
    if (p.z() > 2.0) top.points.push_back(p);
  CHECK_THROWS_AS((void)estimate_dbh(top, {.ground_z = 0.0}), MissingTrunk);
}

TEST_CASE("ransac prefers the denser of two rings") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 2 * pi);
  std::vector<Vec2> pts;
  for (int i = 0; i < 150; ++i) {
    const double a = u(rng);
    pts.emplace_back(0.2 * std::cos(a), 0.2 * std::sin(a));
  }
  for (int i = 0; i < 50; ++i) {
    const double a = u(rng);
    pts.emplace_back(0.5 * std::cos(a), 0.5 * std::sin(a));
  }
  const auto r = fit_circle_ransac(pts, 200, 0.01, 42);
  REQUIRE(r);
  CHECK(r->circle.radius == doctest::Approx(0.2).epsilon(0.01));
  CHECK(r->inliers == 150);
}

TEST_CASE("dbh allometry") {
  CHECK(dbh_from_height(15.0, 2.0, 1.0) == doctest::Approx(0.30));
  CHECK(dbh_from_height(5.0, 30.0, 0.0) == dbh_from_height(40.0, 30.0, 0.0));
  const double a = 1.7, b = 0.83, h = 23.4;
  const double d_cm = dbh_from_height(h, a, b) * 100.0;
  CHECK(std::pow(d_cm / a, 1.0 / b) == doctest::Approx(h).epsilon(1e-9));
}

TEST_CASE("subtree lengths") {
  const auto chain = skeleton_of({{Vec3(0, 0, 0), kNoNode}, {Vec3(0, 0, 1), 0}, {Vec3(0, 0, 3), 1}});
  CHECK(subtree_lengths(chain) == std::vector<double>{3, 3, 2});
  CHECK(subtree_lengths(skeleton_of({{Vec3::Zero(), kNoNode}})) == std::vector<double>{0});
}

TEST_CASE("radius hand examples") {
  // single child with half the support of its parent
  auto one = skeleton_of({{Vec3(0, 0, 0), kNoNode}, {Vec3(0, 0, 1.3), 0}, {Vec3(0, 0, 2.6), 1}});
  assign_radii(one, 0.4);
  CHECK(one.nodes[1].radius == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(one.nodes[2].radius == doctest::Approx(0.2 * std::pow(0.5, 1.5)).epsilon(1e-12));
  CHECK(std::abs(one.nodes[2].radius - 0.0707) < 1e-4);
  CHECK(one.nodes[0].radius == one.nodes[1].radius);

  // two children, the larger with half the parent's support
  auto two = skeleton_of({{Vec3(0, 0, 0), kNoNode}, {Vec3(0, 0, 1.3), 0}, {Vec3(0, 0, 2.8), 1},
                          {Vec3(0.2, 0, 1.3), 1}});
  assign_radii(two, 0.4);
  CHECK(two.nodes[2].radius == doctest::Approx(0.2 * std::pow(0.5, 0.4)).epsilon(1e-12));
  CHECK(std::abs(two.nodes[2].radius - 0.1516) < 1e-4);

  // a near-zero edge leaves parent and child with the same support
  auto same = skeleton_of({{Vec3(0, 0, 0), kNoNode}, {Vec3(0, 0, 1.3), 0}, {Vec3(0, 0, 1.3 + 1e-9), 1},
                           {Vec3(0, 0, 2.6), 2}});
  assign_radii(same, 0.4, {.min_radius = 0.0});
  CHECK(same.nodes[3].radius == doctest::Approx(same.nodes[2].radius).epsilon(1e-6));
}

TEST_CASE("radii never grow toward the tips") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    TreeParams tp;
    tp.depth = static_cast<int>(seed % 4);
    tp.branching = 2 + static_cast<int>(seed % 3);
    SkeletonGraph sk = generate_tree(tp, seed).skeleton;
    assign_radii(sk, 0.1 + 0.001 * static_cast<double>(seed % 300));
    for (const auto& n : sk.nodes)
      if (n.parent != kNoNode) REQUIRE(n.radius <= sk.nodes[n.parent].radius);
  }
}

TEST_CASE("frustum volume") {
  auto sk = skeleton_of({{Vec3(0, 0, 0), kNoNode}, {Vec3(0, 0, 1), 0}});
  sk.nodes[0].radius = sk.nodes[1].radius = 0.1;
  CHECK(model_volume(sk) == doctest::Approx(pi * 0.01).epsilon(1e-12));
  sk.nodes[1].pos = Vec3(0, 0, 3);
  sk.nodes[0].radius = 0.2;
  CHECK(model_volume(sk) == doctest::Approx(0.07 * pi).epsilon(1e-12));
  CHECK(std::abs(model_volume(sk) - 0.21991) < 1e-5);
  CHECK(model_volume(skeleton_of({{Vec3::Zero(), kNoNode}})) == 0.0);

  const auto t = generate_tree(TreeParams{}, 12);
  CHECK(model_volume(t.skeleton) == doctest::Approx(frusta(t.skeleton)).epsilon(1e-12));
}

TEST_CASE("biomass") {
  CHECK(*agb(1.0, 500.0) == 500.0);
  CHECK(*agb(0.0, 500.0) == 0.0);
  CHECK(*agb(0.21991, 600.0) == doctest::Approx(131.946).epsilon(1e-5));
  CHECK_FALSE(agb(1.0, std::nullopt));
}

TEST_CASE("hermite smoothing") {
  const std::vector<Vec3> two{Vec3(0, 0, 0), Vec3(0, 0, 2)};
  const auto s2 = smooth_branch(two, 5);
  CHECK(s2.size() == 7);
  CHECK(s2.front() == two.front());
  CHECK(s2.back() == two.back());
  for (const Vec3& p : s2) CHECK(p.head<2>().norm() < 1e-12);

  const std::vector<Vec3> line{Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(3, 3, 3)};
  for (const Vec3& p : smooth_branch(line, 4)) CHECK(p.cross(Vec3(1, 1, 1)).norm() < 1e-12);

  const std::vector<Vec3> corner{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0)};
  const auto s = smooth_branch(corner, 5);
  for (const Vec3& c : corner)
    CHECK(std::any_of(s.begin(), s.end(), [&](const Vec3& p) { return (p - c).norm() < 1e-12; }));
  double off = 0;  // distance of the samples from the corner chord x + y = 1
  for (const Vec3& p : s) off = std::max(off, std::abs(p.x() + p.y() - 1.0));
  CHECK(off > 0.01);
}

TEST_CASE("generalized cylinder counts") {
  const std::vector<Vec3> line{Vec3(0, 0, 0), Vec3(0, 0, 1)};
  const std::vector<double> r{0.1, 0.1};
  const TriangleMesh m = generalized_cylinder_mesh(line, r, 16);
  CHECK(m.vertices.size() == 34);
  CHECK(m.triangles.size() == 64);
  const TriangleMesh tri = generalized_cylinder_mesh(line, r, 3);
  CHECK(tri.vertices.size() == 8);
  CHECK(tri.triangles.size() == 12);
  CHECK(mesh_volume(tri) > 0.0);
}

TEST_CASE("closed cylinder mesh volume") {
  const std::vector<Vec3> line{Vec3(0, 0, 0), Vec3(0, 0, 1)};
  const std::vector<double> r{0.1, 0.1};
  CHECK(mesh_volume(generalized_cylinder_mesh(line, r, 64)) == doctest::Approx(pi * 0.01).epsilon(0.01));
}

TEST_CASE("tree mesh volume follows the frusta") {
  const auto t = generate_tree(TreeParams{}, 4);
  const TriangleMesh m = tree_mesh(t.skeleton, 32);
  CHECK(mesh_volume(m) == doctest::Approx(t.volume_m3).epsilon(0.02));
  std::size_t chained = 0;
  for (const auto& chain : branch_chains(t.skeleton)) chained += chain.size();
  CHECK(chained == t.skeleton.size() + branch_chains(t.skeleton).size() - 1);
}
