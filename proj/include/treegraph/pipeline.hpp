#pragma once

#include "treegraph/config.hpp"
#include "treegraph/io.hpp"
#include "treegraph/model.hpp"
#include "treegraph/segment.hpp"
#include "treegraph/skeleton.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace treegraph {

/// Index of the lowest point; z ties go to the smaller index.
NodeId lowest_point(const PointCloud& cloud);

/// max z - min z.
double cloud_height(const PointCloud& cloud);

struct DbhChoice {
  double dbh_m = 0.0;
  DbhSource origin = DbhSource::Estimated;
};

/// DBH per `cfg.dbh_source`. A measured source without a value for this tree
/// estimates instead. An estimate that fails with MissingTrunk or
/// ImplausibleFit falls back to `measured`, then to the allometry; with
/// neither available the error propagates.
DbhChoice resolve_dbh(const PointCloud& tree, const RunConfig& cfg, std::optional<double> measured);

struct TreeOutput {
  TreeRecord record;
  DbhSource dbh_origin = DbhSource::Estimated;
  std::size_t n_points = 0;
  std::vector<std::uint8_t> leaf;  // per input point
  std::optional<TriangleMesh> mesh;
};

/// Graph, skeleton, DBH, radii, volume and AGB for one tree cloud.
TreeOutput reconstruct_tree(const PointCloud& tree, int tree_id, const RunConfig& cfg,
                            std::optional<double> measured_dbh, bool with_mesh);

struct TreeInput {
  int tree_id = 0;
  PointCloud cloud;
};

struct TreeFailure {
  int tree_id = 0;
  std::string error;  // error class name
  std::string message;
};

struct BatchResult {
  std::vector<TreeOutput> trees;  // successful trees, input order
  std::vector<TreeFailure> failures;
};

/// Reconstructs trees in parallel. A failing tree is recorded and skipped.
BatchResult reconstruct_trees(const std::vector<TreeInput>& inputs, const RunConfig& cfg,
                              const std::map<int, double>& measured_dbh, bool with_mesh);

struct Segmentation {
  std::vector<TreeSubgraph> subgraphs;
  std::vector<int> labels;  // per point, -1 for understory
};

/// Segments a scene. Trees come first, numbered 0..T-1 by root index; the
/// understory subgraphs follow.
Segmentation segment_cloud(const PointCloud& cloud, const RunConfig& cfg);

/// Member clouds of the subgraphs flagged as trees, numbered by tree_id.
std::vector<TreeInput> tree_inputs(const PointCloud& cloud, const Segmentation& seg);

/// Reads "tree_id,dbh_m" rows; a header row is allowed.
std::map<int, double> load_dbh_csv(const std::string& path);

std::string error_name(const std::exception& e);

}  // namespace treegraph
