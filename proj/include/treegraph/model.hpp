#pragma once

#include "treegraph/skeleton.hpp"
#include "treegraph/types.hpp"

#include <Eigen/Core>

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace treegraph {

// ---------------------------------------------------------------- DBH

using Vec2 = Eigen::Vector2d;

struct Circle {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
};

/// Algebraic (Kasa) least-squares circle. Needs at least three
/// non-collinear points.
std::optional<Circle> fit_circle_algebraic(std::span<const Vec2> points);

struct RansacResult {
  Circle circle;
  std::size_t inliers = 0;
};

/// Three-point RANSAC followed by an algebraic refit on the best inlier set.
std::optional<RansacResult> fit_circle_ransac(std::span<const Vec2> points, int iterations,
                                              double tolerance, std::uint64_t seed);

struct DbhOptions {
  int iterations = 200;
  double tolerance = 0.02;
  std::uint64_t seed = 42;
  /// Ground elevation; defaults to the lowest point of the tree.
  std::optional<double> ground_z;
  double slab_low = 1.2;
  double slab_high = 1.4;
  std::size_t min_points = 20;
  double min_radius = 0.01;
  double max_radius = 2.0;
};

/// Stem diameter from a RANSAC circle fit to the breast-height slab.
/// Throws MissingTrunk or ImplausibleFit.
double estimate_dbh(const PointCloud& tree, const DbhOptions& opts = {});

/// Power-law DBH from height: dbh_cm = a * height^b, returned in meters.
double dbh_from_height(double height_m, double a, double b);

// ---------------------------------------------------------------- radii

struct RadiusParams {
  double gamma_single = 1.5;
  double gamma_multi = 0.4;
  double min_radius = 0.002;
  double breast_height = 1.3;
};

/// Edge length into each node plus the lengths of all its descendants.
std::vector<double> subtree_lengths(const SkeletonGraph& skeleton);

/// Index of the node on the dominant stem (max-subtree-length child chain
/// from the root) whose height above the root is closest to breast height.
std::uint32_t breast_height_node(const SkeletonGraph& skeleton, std::span<const double> lengths,
                                 double breast_height = 1.3);

/// Radii from the allometric ratio of supported subtree lengths, anchored at
/// dbh / 2 on the breast-height node and held constant below it.
void assign_radii(SkeletonGraph& skeleton, double dbh_m, const RadiusParams& params = {});

// ---------------------------------------------------------------- volume

/// Sum of conical frusta over all skeleton edges.
double model_volume(const SkeletonGraph& skeleton);

/// Volume times wood density; empty when no density is given.
std::optional<double> agb(double volume_m3, std::optional<double> wood_density_kg_m3);

// ---------------------------------------------------------------- mesh

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  void append(const TriangleMesh& other);
};

/// Cubic Hermite interpolation with central-difference tangents. Inserts
/// `samples_per_edge` samples inside every edge and keeps all input points.
std::vector<Vec3> smooth_branch(std::span<const Vec3> polyline, int samples_per_edge = 5);

/// Tube of rings swept along `samples` with parallel-transported frames;
/// both ends are closed with a triangle fan. Triangles wind counterclockwise
/// seen from outside.
TriangleMesh generalized_cylinder_mesh(std::span<const Vec3> samples, std::span<const double> radii,
                                       int radial_segments);

/// Chains of skeleton node ids. The first chain starts at the root and
/// follows the child with the largest subtree length; every other child
/// starts a new chain that begins with its parent node.
std::vector<std::vector<std::uint32_t>> branch_chains(const SkeletonGraph& skeleton);

/// One smoothed, closed tube per branch chain.
TriangleMesh tree_mesh(const SkeletonGraph& skeleton, int radial_segments, int samples_per_edge = 5);

/// Enclosed volume of a closed, consistently wound mesh (divergence theorem).
double mesh_volume(const TriangleMesh& mesh);

}  // namespace treegraph
