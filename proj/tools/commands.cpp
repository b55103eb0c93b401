#include "commands.hpp"

#include "treegraph/eval.hpp"
#include "treegraph/io.hpp"
#include "treegraph/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>

namespace treegraph::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string tree_name(int id) { return "tree_" + std::to_string(id); }

PointCloud load_nonempty(const std::string& path) {
  if (!fs::exists(path)) throw IoError("no such file: " + path);
  PointCloud cloud = load_point_cloud(path);
  if (cloud.empty()) throw ParseError("no points in " + path, 1);
  return cloud;
}

json tree_json(const TreeOutput& t, const std::string& skeleton_file, const std::string& mesh_file) {
  json j;
  j["tree_id"] = t.record.tree_id;
  j["n_points"] = t.n_points;
  j["dbh_m"] = optional_json(t.record.dbh_m);
  j["dbh_source"] = to_string(t.dbh_origin);
  j["height_m"] = t.record.height_m;
  j["volume_m3"] = t.record.volume_m3;
  j["agb_kg"] = optional_json(t.record.agb_kg);
  j["skeleton_nodes"] = t.record.skeleton.size();
  j["skeleton"] = skeleton_file;
  j["mesh"] = mesh_file.empty() ? json(nullptr) : json(mesh_file);
  return j;
}

// Run a command body, mapping input and configuration errors to a usage exit.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << error_name(e) << ": " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace

RunConfig effective_config(const std::string& config_path, const json& overrides) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  apply_config_json(cfg, overrides);
  cfg.validate();
  return cfg;
}

int cmd_segment(const SegmentOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = effective_config(opts.config_path, opts.overrides);
    const PointCloud cloud = load_nonempty(opts.input);
    const Segmentation seg = segment_cloud(cloud, cfg);
    make_dir(opts.out_dir);

    json trees = json::array();
    std::size_t understory = 0;
    for (const TreeSubgraph& sg : seg.subgraphs) {
      if (!sg.is_tree) {
        understory += sg.members.size();
        continue;
      }
      const std::string file = tree_name(sg.tree_id) + ".xyz";
      const PointCloud tree = cloud.subset(sg.members);
      save_point_cloud(tree, (fs::path(opts.out_dir) / file).string(), CloudFormat::Xyz);
      const Vec3& r = cloud.points[sg.root];
      json t;
      t["tree_id"] = sg.tree_id;
      t["cloud"] = file;
      t["n_points"] = sg.members.size();
      t["root_index"] = sg.root;
      t["root"] = {r.x(), r.y(), r.z()};
      t["height_m"] = cloud_height(tree);
      trees.push_back(std::move(t));
    }

    std::vector<PointLabel> labels(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) labels[i].tree_id = seg.labels[i];
    save_labels(labels, (fs::path(opts.out_dir) / "labels.txt").string());

    json manifest;
    manifest["input"] = fs::path(opts.input).filename().string();
    manifest["n_points"] = cloud.size();
    manifest["n_trees"] = trees.size();
    manifest["n_understory_points"] = understory;
    manifest["labels"] = "labels.txt";
    manifest["config"] = config_to_json(cfg);
    manifest["trees"] = std::move(trees);
    write_json(manifest, (fs::path(opts.out_dir) / "segment.json").string());

    out << "segmented " << cloud.size() << " points into " << manifest["n_trees"].get<std::size_t>()
        << " trees (" << understory << " understory points)\n";
    return static_cast<int>(kOk);
  });
}

int cmd_reconstruct(const ReconstructOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.inputs.empty()) throw ConfigError("no input given");
    const RunConfig cfg = effective_config(opts.config_path, opts.overrides);
    std::map<int, double> measured;
    if (opts.dbh_csv) measured = load_dbh_csv(*opts.dbh_csv);

    std::vector<TreeInput> inputs;
    // fused mode: scene point index of every tree point, for the scene labels
    std::optional<Segmentation> scene_seg;
    std::size_t scene_points = 0;
    if (opts.segment) {
      if (opts.inputs.size() != 1) throw ConfigError("--segment takes exactly one scene cloud");
      const PointCloud scene = load_nonempty(opts.inputs[0]);
      scene_seg = segment_cloud(scene, cfg);
      scene_points = scene.size();
      inputs = tree_inputs(scene, *scene_seg);
    } else {
      for (std::size_t k = 0; k < opts.inputs.size(); ++k) {
        const std::string& in = opts.inputs[k];
        if (fs::path(in).extension() == ".json") {
          const json manifest = read_json(in);
          if (!manifest.contains("trees") || !manifest["trees"].is_array())
            throw ParseError("segment manifest " + in + " has no trees array", 1);
          const fs::path dir = fs::path(in).parent_path();
          for (const json& t : manifest["trees"])
            inputs.push_back({t.at("tree_id").get<int>(),
                              load_nonempty((dir / t.at("cloud").get<std::string>()).string())});
        } else {
          const int id = opts.tree_id && opts.inputs.size() == 1 ? *opts.tree_id : static_cast<int>(k);
          inputs.push_back({id, load_nonempty(in)});
        }
      }
    }
    std::set<int> ids;
    for (const auto& t : inputs)
      if (!ids.insert(t.tree_id).second) throw ConfigError("duplicate tree id " + std::to_string(t.tree_id));

    const BatchResult batch = reconstruct_trees(inputs, cfg, measured, opts.mesh);
    make_dir(opts.out_dir);
    const fs::path dir(opts.out_dir);

    json trees = json::array();
    double total_volume = 0.0, total_agb = 0.0;
    for (const TreeOutput& t : batch.trees) {
      const std::string name = tree_name(t.record.tree_id);
      save_skeleton(t.record, (dir / (name + ".json")).string());
      std::string mesh_file;
      if (t.mesh) {
        mesh_file = name + ".obj";
        save_mesh(*t.mesh, (dir / mesh_file).string(), MeshFormat::Obj);
      }
      if (opts.labels) {
        std::vector<PointLabel> labels(t.leaf.size());
        for (std::size_t i = 0; i < t.leaf.size(); ++i) labels[i] = {t.record.tree_id, t.leaf[i]};
        save_labels(labels, (dir / (name + "_labels.txt")).string());
      }
      total_volume += t.record.volume_m3;
      if (t.record.agb_kg) total_agb += *t.record.agb_kg;
      trees.push_back(tree_json(t, name + ".json", mesh_file));
    }

    if (opts.labels && scene_seg) {
      std::vector<PointLabel> labels(scene_points);
      for (std::size_t i = 0; i < scene_points; ++i) labels[i].tree_id = scene_seg->labels[i];
      std::map<int, const TreeOutput*> by_id;
      for (const TreeOutput& t : batch.trees) by_id[t.record.tree_id] = &t;
      for (const TreeSubgraph& sg : scene_seg->subgraphs) {
        const auto it = by_id.find(sg.tree_id);
        if (!sg.is_tree || it == by_id.end()) continue;
        for (std::size_t i = 0; i < sg.members.size(); ++i) labels[sg.members[i]].leaf = it->second->leaf[i];
      }
      save_labels(labels, (dir / "labels.txt").string());
    }

    json failures = json::array();
    for (const TreeFailure& f : batch.failures)
      failures.push_back({{"tree_id", f.tree_id}, {"error", f.error}, {"message", f.message}});

    json report;
    report["config"] = config_to_json(cfg);
    report["n_trees"] = batch.trees.size();
    report["n_failed"] = batch.failures.size();
    report["total_volume_m3"] = total_volume;
    report["total_agb_kg"] = cfg.wood_density ? json(total_agb) : json(nullptr);
    report["trees"] = std::move(trees);
    report["failures"] = failures;
    write_json(report, (dir / "report.json").string());

    out << std::left << std::setw(8) << "tree" << std::setw(12) << "volume_m3" << std::setw(12) << "agb_kg"
        << std::setw(10) << "dbh_m" << "dbh_source\n";
    for (const TreeOutput& t : batch.trees) {
      out << std::setw(8) << t.record.tree_id << std::setw(12) << shortest(t.record.volume_m3).substr(0, 10)
          << std::setw(12) << (t.record.agb_kg ? shortest(*t.record.agb_kg).substr(0, 10) : "-")
          << std::setw(10) << (t.record.dbh_m ? shortest(*t.record.dbh_m).substr(0, 8) : "-")
          << to_string(t.dbh_origin) << '\n';
    }
    for (const TreeFailure& f : batch.failures)
      err << "tree " << f.tree_id << " failed: " << f.error << ": " << f.message << '\n';
    if (!batch.failures.empty()) {
      err << failures.dump() << '\n';
      return static_cast<int>(kTreeFailures);
    }
    return static_cast<int>(kOk);
  });
}

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = effective_config(opts.config_path, opts.overrides);
    const EvalSeries series = load_pairs_csv(opts.pairs);
    const EvalReport report = evaluate(series, opts.cumulative, cfg.n_repeats, cfg.seed);
    if (!opts.output.empty()) write_json(report_to_json(report, series), opts.output);
    if (!opts.plot.empty()) {
      std::ofstream svg(opts.plot, std::ios::binary);
      if (!svg) throw IoError("cannot write " + opts.plot);
      svg << scatter_svg(series);
      if (!svg) throw IoError("cannot write " + opts.plot);
    }
    out << report_table(report);
    return static_cast<int>(kOk);
  });
}

int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    json pj = SceneParams{}.to_json();
    if (!opts.params_path.empty()) pj = SceneParams::from_json(read_json(opts.params_path)).to_json();
    pj.merge_patch(opts.overrides);
    const SceneParams params = SceneParams::from_json(pj);

    Scene scene = generate_scene(params, opts.seed);
    PointCloud cloud = std::move(scene.cloud);
    std::vector<PointLabel> labels = std::move(scene.labels);
    if (opts.degrade) {
      const auto keep = degrade_indices(cloud, *opts.degrade, opts.degrade_params, derive_seed(opts.seed, 0xde9));
      std::vector<PointLabel> kept;
      kept.reserve(keep.size());
      for (const NodeId i : keep) kept.push_back(labels[i]);
      cloud = cloud.subset(keep);
      labels = std::move(kept);
    }

    const fs::path dir(opts.out_dir);
    make_dir((dir / "truth").string());
    const std::string cloud_file = "scene" + opts.cloud_ext;
    save_point_cloud(cloud, (dir / cloud_file).string(), cloud_format_for(cloud_file));
    save_labels(labels, (dir / "labels.txt").string());

    std::vector<std::size_t> counts(scene.trees.size(), 0);
    std::size_t understory = 0;
    for (const PointLabel& l : labels) {
      if (l.tree_id < 0) ++understory;
      else ++counts[static_cast<std::size_t>(l.tree_id)];
    }

    json trees = json::array();
    std::string csv = "tree_id,dbh_m\n";
    for (std::size_t i = 0; i < scene.trees.size(); ++i) {
      const auto& t = scene.trees[i];
      const int id = static_cast<int>(i);
      const std::string file = "truth/" + tree_name(id) + ".json";
      save_skeleton(truth_record(t, id, params.wood_density), (dir / file).string());
      csv += std::to_string(id) + "," + shortest(t.dbh_m()) + "\n";
      json j;
      j["tree_id"] = id;
      j["truth"] = file;
      j["dbh_m"] = t.dbh_m();
      j["height_m"] = t.height_m();
      j["volume_m3"] = t.volume_m3;
      j["agb_kg"] = t.volume_m3 * params.wood_density;
      j["n_points"] = counts[i];
      trees.push_back(std::move(j));
    }
    {
      std::ofstream f(dir / "dbh.csv", std::ios::binary);
      f << csv;
      if (!f) throw IoError("cannot write dbh.csv");
    }

    json manifest;
    manifest["seed"] = opts.seed;
    manifest["params"] = params.to_json();
    manifest["cloud"] = cloud_file;
    manifest["labels"] = "labels.txt";
    manifest["dbh_csv"] = "dbh.csv";
    manifest["n_points"] = cloud.size();
    manifest["n_understory_points"] = understory;
    if (opts.degrade) {
      const DegradeParams& d = opts.degrade_params;
      manifest["degrade"] = {{"mode", to_string(*opts.degrade)},
                             {"keep_fraction", d.keep_fraction},
                             {"crop_height", d.crop_height},
                             {"ground_z", optional_json(d.ground_z)},
                             {"uls_decay", d.uls_decay},
                             {"uls_floor", d.uls_floor}};
    } else {
      manifest["degrade"] = nullptr;
    }
    manifest["trees"] = std::move(trees);
    write_json(manifest, (dir / "synth.json").string());

    out << "wrote " << scene.trees.size() << " trees, " << cloud.size() << " points to " << opts.out_dir << '\n';
    return static_cast<int>(kOk);
  });
}

}  // namespace treegraph::cli
