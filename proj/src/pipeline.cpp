#include "treegraph/pipeline.hpp"

#include "treegraph/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace treegraph {

NodeId lowest_point(const PointCloud& cloud) {
  if (cloud.empty()) throw Error("empty point cloud");
  NodeId best = 0;
  for (NodeId i = 1; i < cloud.size(); ++i)
    if (cloud.points[i].z() < cloud.points[best].z()) best = i;
  return best;
}

double cloud_height(const PointCloud& cloud) {
  if (cloud.empty()) return 0.0;
  double lo = cloud.points[0].z(), hi = lo;
  for (const Vec3& p : cloud.points) {
    lo = std::min(lo, p.z());
    hi = std::max(hi, p.z());
  }
  return hi - lo;
}

DbhChoice resolve_dbh(const PointCloud& tree, const RunConfig& cfg, std::optional<double> measured) {
  if (!measured) measured = cfg.dbh_m;
  auto allometric = [&]() -> std::optional<DbhChoice> {
    if (!cfg.dbh_allometry) return std::nullopt;
    return DbhChoice{dbh_from_height(cloud_height(tree), cfg.dbh_allometry->first,
                                     cfg.dbh_allometry->second),
                     DbhSource::Allometric};
  };
  switch (cfg.dbh_source) {
    case DbhSource::Measured:
      if (measured) return {*measured, DbhSource::Measured};
      break;
    case DbhSource::Allometric:
      if (auto a = allometric()) return *a;
      throw ConfigError("dbh_source allometric needs dbh_allometry coefficients");
    case DbhSource::Estimated:
      break;
  }
  DbhOptions opts;
  opts.iterations = cfg.ransac_iterations;
  opts.tolerance = cfg.ransac_tolerance;
  opts.seed = cfg.seed;
  opts.ground_z = cfg.ground_z;
  try {
    return {estimate_dbh(tree, opts), DbhSource::Estimated};
  } catch (const MissingTrunk&) {
    if (measured) return {*measured, DbhSource::Measured};
    if (auto a = allometric()) return *a;
    throw;
  } catch (const ImplausibleFit&) {
    if (measured) return {*measured, DbhSource::Measured};
    if (auto a = allometric()) return *a;
    throw;
  }
}

TreeOutput reconstruct_tree(const PointCloud& tree, int tree_id, const RunConfig& cfg,
                            std::optional<double> measured_dbh, bool with_mesh) {
  if (tree.size() < 2) throw SkeletonError("tree has fewer than two points");
  const HybridGraph graph = build_hybrid_graph(tree, cfg.k);
  SkeletonResult sk = skeletonize(tree, graph, lowest_point(tree), cfg);

  const DbhChoice dbh = resolve_dbh(tree, cfg, measured_dbh);
  RadiusParams rp;
  rp.gamma_single = cfg.gamma_single;
  rp.gamma_multi = cfg.gamma_multi;
  rp.min_radius = cfg.min_radius;
  assign_radii(sk.skeleton, dbh.dbh_m, rp);

  TreeOutput out;
  out.n_points = tree.size();
  out.dbh_origin = dbh.origin;
  out.record.tree_id = tree_id;
  out.record.dbh_m = dbh.dbh_m;
  out.record.height_m = cloud_height(tree);
  out.record.volume_m3 = model_volume(sk.skeleton);
  out.record.agb_kg = agb(out.record.volume_m3, cfg.wood_density);
  if (with_mesh) out.mesh = tree_mesh(sk.skeleton, cfg.radial_segments, cfg.samples_per_edge);
  out.record.skeleton = std::move(sk.skeleton);
  out.leaf = std::move(sk.leaf);
  return out;
}

std::string error_name(const std::exception& e) {
  if (dynamic_cast<const MissingTrunk*>(&e)) return "MissingTrunk";
  if (dynamic_cast<const ImplausibleFit*>(&e)) return "ImplausibleFit";
  if (dynamic_cast<const SkeletonError*>(&e)) return "SkeletonError";
  if (dynamic_cast<const GraphError*>(&e)) return "GraphError";
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
  if (dynamic_cast<const IoError*>(&e)) return "IoError";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "InternalError";
}

BatchResult reconstruct_trees(const std::vector<TreeInput>& inputs, const RunConfig& cfg,
                              const std::map<int, double>& measured_dbh, bool with_mesh) {
  const auto n = static_cast<std::int64_t>(inputs.size());
  std::vector<std::optional<TreeOutput>> done(inputs.size());
  std::vector<std::optional<TreeFailure>> failed(inputs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& in = inputs[i];
    std::optional<double> dbh;
    if (const auto it = measured_dbh.find(in.tree_id); it != measured_dbh.end()) dbh = it->second;
    try {
      done[i] = reconstruct_tree(in.cloud, in.tree_id, cfg, dbh, with_mesh);
    } catch (const std::exception& e) {
      failed[i] = TreeFailure{in.tree_id, error_name(e), e.what()};
    }
  }
  BatchResult r;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (done[i]) r.trees.push_back(std::move(*done[i]));
    if (failed[i]) r.failures.push_back(std::move(*failed[i]));
  }
  return r;
}

Segmentation segment_cloud(const PointCloud& cloud, const RunConfig& cfg) {
  if (cloud.empty()) throw Error("empty point cloud");
  std::vector<Edge> bridges;
  const HybridGraph graph =
      repair_connectivity(prune_dispersed_edges(build_knn_graph(cloud, cfg.k)), cloud, &bridges);
  Segmentation seg;
  seg.subgraphs = segment_trees(graph, cloud, cfg, bridges);
  // trees first, numbered 0..T-1 in root order, then the understory
  std::stable_partition(seg.subgraphs.begin(), seg.subgraphs.end(),
                        [](const TreeSubgraph& s) { return s.is_tree; });
  for (std::size_t i = 0; i < seg.subgraphs.size(); ++i) seg.subgraphs[i].tree_id = static_cast<int>(i);
  seg.labels = tree_labels(seg.subgraphs, cloud.size());
  return seg;
}

std::vector<TreeInput> tree_inputs(const PointCloud& cloud, const Segmentation& seg) {
  std::vector<TreeInput> out;
  for (const auto& s : seg.subgraphs)
    if (s.is_tree) out.push_back({s.tree_id, cloud.subset(s.members)});
  return out;
}

std::map<int, double> load_dbh_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::map<int, double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      f.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    int id = 0;
    double dbh = 0.0;
    const bool ok = f.size() >= 2 &&
                    std::from_chars(f[0].data(), f[0].data() + f[0].size(), id).ptr == f[0].data() + f[0].size() &&
                    std::from_chars(f[1].data(), f[1].data() + f[1].size(), dbh).ptr == f[1].data() + f[1].size() &&
                    !f[0].empty() && !f[1].empty();
    if (!ok) {
      if (lineno == 1) continue;  // header
      throw ParseError("expected tree_id,dbh_m", lineno);
    }
    if (!(dbh > 0.0)) throw ParseError("DBH must be positive", lineno);
    out[id] = dbh;
  }
  return out;
}

}  // namespace treegraph
