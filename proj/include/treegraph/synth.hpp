#pragma once

#include "treegraph/io.hpp"
#include "treegraph/skeleton.hpp"
#include "treegraph/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace treegraph {

/// Procedural tree parameters. Angles in degrees, lengths in meters.
struct TreeParams {
  int depth = 2;                 // branching levels below the trunk; 0 = bare trunk
  int branching = 3;             // laterals per whorl / per branch node
  double height = 12.0;
  double dbh = 0.30;             // diameter at the breast-height node
  double lean = 3.0;             // trunk tilt from vertical
  double crown_base = 0.45;      // first whorl, fraction of height
  int whorls = 5;
  double segment_length = 0.5;   // target skeleton edge length
  double branch_length = 2.6;    // first-order length at the crown base
  double length_decay = 0.55;    // child / parent branch length
  double angle_min = 40.0;       // lateral angle from the parent axis
  double angle_max = 65.0;
  double azimuth_jitter = 25.0;
  double bend = 10.0;            // per-segment direction jitter of branches
  double min_elevation = 10.0;   // branches never point lower than this above horizontal
  double gamma_single = 1.5;
  double gamma_multi = 0.4;
  double min_radius = 0.002;

  [[nodiscard]] nlohmann::json to_json() const;
  static TreeParams from_json(const nlohmann::json& j);
};

struct SamplingParams {
  double density = 2000.0;       // wood points per m^2 of surface
  double noise = 0.003;          // radial Gaussian sigma, truncated at 3 sigma
  double leaf_fraction = 0.0;    // leaf points relative to wood points
  double leaf_radius = 0.5;      // horizontal semi-axis of tip ellipsoids
  double leaf_height = 0.3;      // vertical semi-axis

  [[nodiscard]] nlohmann::json to_json() const;
  static SamplingParams from_json(const nlohmann::json& j);
};

struct SyntheticTree {
  TreeParams params;
  std::uint64_t seed = 0;
  SkeletonGraph skeleton;        // truth radii in SkeletonNode::radius
  std::uint32_t breast_node = 0;
  double volume_m3 = 0.0;
  PointCloud cloud;
  std::vector<std::uint8_t> leaf;
  /// Skeleton node whose incoming edge generated the point; kNoNode for leaves.
  std::vector<std::uint32_t> source;

  [[nodiscard]] double dbh_m() const { return 2.0 * skeleton.nodes[breast_node].radius; }
  [[nodiscard]] double height_m() const;
};

/// Deterministic skeleton with radii from the subtree-length power law,
/// anchored at dbh/2 on the breast-height trunk node. No points yet.
SyntheticTree generate_tree(const TreeParams& params, std::uint64_t seed);

/// Sum of conical frusta over the edges, evaluated independently of the
/// tree-model code.
double frustum_volume(const SkeletonGraph& skeleton);

/// Fills cloud/leaf/source. Wood points are area-uniform on each edge frustum.
void sample_surface(SyntheticTree& tree, const SamplingParams& sampling, std::uint64_t seed);

enum class DegradeMode { UlsTopdown, Sparsify, CropBelow };

DegradeMode degrade_mode_from_string(const std::string& s);
std::string to_string(DegradeMode m);

struct DegradeParams {
  double keep_fraction = 0.5;    // sparsify
  double crop_height = 2.0;      // crop_below, above ground_z (or the lowest point)
  std::optional<double> ground_z;
  double uls_decay = 3.0;        // uls_topdown: keep = max(floor, exp(-depth / decay))
  double uls_floor = 0.01;
};

/// Indices of the points that survive, ascending.
std::vector<NodeId> degrade_indices(const PointCloud& cloud, DegradeMode mode,
                                    const DegradeParams& params, std::uint64_t seed);
PointCloud degrade(const PointCloud& cloud, DegradeMode mode, const DegradeParams& params,
                   std::uint64_t seed);

struct SceneParams {
  int n_trees = 10;
  double spacing = 8.0;
  double jitter = 1.0;
  double understory_fraction = 0.05;   // understory points relative to tree points
  double height_spread = 0.15;         // relative variation of tree height and dbh
  double wood_density = 600.0;
  TreeParams tree;
  SamplingParams sampling;

  [[nodiscard]] nlohmann::json to_json() const;
  static SceneParams from_json(const nlohmann::json& j);
};

struct Scene {
  SceneParams params;
  std::uint64_t seed = 0;
  std::vector<SyntheticTree> trees;  // translated to their plot positions
  PointCloud cloud;
  std::vector<PointLabel> labels;    // tree_id -1 for understory
};

Scene generate_scene(const SceneParams& params, std::uint64_t seed);

/// Truth record of one synthetic tree for skeleton JSON export.
TreeRecord truth_record(const SyntheticTree& tree, int tree_id, std::optional<double> wood_density);

/// Derives an independent stream seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace treegraph
