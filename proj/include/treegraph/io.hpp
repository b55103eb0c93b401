#pragma once

#include "treegraph/graph.hpp"
#include "treegraph/model.hpp"
#include "treegraph/skeleton.hpp"
#include "treegraph/types.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace treegraph {

enum class CloudFormat { Xyz, Ply };
enum class MeshFormat { Obj, Ply };

/// Format from the file extension (.xyz/.txt/.asc or .ply).
CloudFormat cloud_format_for(const std::string& path);
MeshFormat mesh_format_for(const std::string& path);

/// Throws ParseError (with the 1-based line or record number) on malformed
/// input and on an empty file.
PointCloud load_point_cloud(const std::string& path, CloudFormat format);
PointCloud load_point_cloud(const std::string& path);

struct PlyWriteOptions {
  bool binary = true;
  bool double_precision = false;
};

/// XYZ output uses shortest round-trip decimal formatting.
void save_point_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format,
                      const PlyWriteOptions& ply = {});

/// One reconstructed tree as serialized to skeleton JSON.
struct TreeRecord {
  int tree_id = 0;
  std::optional<double> dbh_m;
  double height_m = 0.0;
  double volume_m3 = 0.0;
  std::optional<double> agb_kg;
  SkeletonGraph skeleton;
};

nlohmann::json tree_record_to_json(const TreeRecord& rec);
/// Validates the skeleton; throws SkeletonError or ParseError.
TreeRecord tree_record_from_json(const nlohmann::json& j);
void save_skeleton(const TreeRecord& rec, const std::string& path);
TreeRecord load_skeleton(const std::string& path);

void save_mesh(const TriangleMesh& mesh, const std::string& path, MeshFormat format);
TriangleMesh load_mesh(const std::string& path, MeshFormat format);

struct PointLabel {
  int tree_id = -1;
  int leaf = 0;
};

void save_labels(const std::vector<PointLabel>& labels, const std::string& path);
std::vector<PointLabel> load_labels(const std::string& path);

/// Debug dumps.
void save_edge_list(const HybridGraph& graph, const std::string& path);
void save_node_metrics(const PathTree& paths, const NodeMetrics& metrics, const std::string& path);

void write_json(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json(const std::string& path);

}  // namespace treegraph
