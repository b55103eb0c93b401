#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace treegraph;
using nlohmann::json;

namespace {

// Config keys shared by the pipeline commands. Only flags that were given
// end up in `overrides`.
struct CommonFlags {
  std::string config;
  std::optional<int> k;
  std::optional<std::uint64_t> seed;
  std::optional<double> min_tree_height;
  std::optional<int> min_tree_points;
  std::optional<double> merge_distance;
  std::optional<double> ground_z;

  void add(CLI::App* app) {
    app->add_option("--config", config, "Run configuration JSON")->check(CLI::ExistingFile);
    app->add_option("--k", k, "Neighbors per point in the graph");
    app->add_option("--seed", seed, "Seed for all randomized steps");
    app->add_option("--min-tree-height", min_tree_height, "Shorter subgraphs are understory (m)");
    app->add_option("--min-tree-points", min_tree_points, "Smaller subgraphs are understory");
    app->add_option("--merge-distance", merge_distance, "Join tree bases closer than this (m)");
    app->add_option("--ground-z", ground_z, "Ground elevation for breast height (m)");
  }

  [[nodiscard]] json overrides() const {
    json j = json::object();
    if (k) j["k"] = *k;
    if (seed) j["seed"] = *seed;
    if (min_tree_height) j["min_tree_height"] = *min_tree_height;
    if (min_tree_points) j["min_tree_points"] = *min_tree_points;
    if (merge_distance) j["merge_distance"] = *merge_distance;
    if (ground_z) j["ground_z"] = *ground_z;
    return j;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-based tree segmentation, skeletonization and biomass estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "treegraph 0.1.0");

  // segment
  cli::SegmentOptions seg;
  CommonFlags seg_flags;
  auto* segment = app.add_subcommand("segment", "Split a plot cloud into tree clouds");
  segment->add_option("input", seg.input, "Point cloud (.xyz/.txt/.ply)")->required();
  segment->add_option("-o,--out", seg.out_dir, "Output directory")->required();
  seg_flags.add(segment);

  // reconstruct
  cli::ReconstructOptions rec;
  CommonFlags rec_flags;
  bool leaf_on = false;
  std::optional<double> freq_threshold, dbh, wood_density;
  std::optional<std::string> dbh_source;
  std::vector<double> allometry;
  auto* reconstruct = app.add_subcommand("reconstruct", "Skeleton, volume and AGB per tree");
  reconstruct->add_option("inputs", rec.inputs, "Tree clouds, segment manifests, or one scene with --segment")
      ->required();
  reconstruct->add_option("-o,--out", rec.out_dir, "Output directory")->required();
  reconstruct->add_flag("--segment", rec.segment, "Segment the input scene first");
  reconstruct->add_flag("--leaf-on", leaf_on, "Leaf-on cloud: split clusters by mean shift");
  reconstruct->add_option("--freq-threshold", freq_threshold, "Drop skeleton nodes below this path frequency");
  reconstruct->add_option("--dbh", dbh, "Measured DBH (m) for every tree");
  reconstruct->add_option("--dbh-csv", rec.dbh_csv, "Measured DBH per tree: tree_id,dbh_m")
      ->check(CLI::ExistingFile);
  reconstruct->add_option("--dbh-allometry", allometry, "a,b in dbh_cm = a * height_m^b")
      ->delimiter(',')
      ->expected(2);
  reconstruct->add_option("--dbh-source", dbh_source, "measured, estimated or allometric")
      ->check(CLI::IsMember({"measured", "estimated", "allometric"}));
  reconstruct->add_option("--wood-density", wood_density, "Basic wood density (kg/m^3)");
  reconstruct->add_option("--tree-id", rec.tree_id, "Tree id for a single cloud input");
  reconstruct->add_flag("--mesh", rec.mesh, "Write an OBJ mesh per tree");
  reconstruct->add_flag("--labels", rec.labels, "Write per-point leaf labels");
  rec_flags.add(reconstruct);

  // evaluate
  cli::EvaluateOptions ev;
  std::optional<int> repeats;
  std::optional<std::uint64_t> ev_seed;
  std::string ev_config;
  auto* evaluate = app.add_subcommand("evaluate", "Compare estimated with reference AGB");
  evaluate->add_option("pairs", ev.pairs, "CSV: tree_id,agb_est_kg,agb_ref_kg")->required();
  evaluate->add_option("-o,--out", ev.output, "Report JSON");
  evaluate->add_flag("--cumulative", ev.cumulative, "Add the random group-size table");
  evaluate->add_option("--plot", ev.plot, "Scatter plot SVG");
  evaluate->add_option("--repeats", repeats, "Draws per group size");
  evaluate->add_option("--seed", ev_seed, "Seed for the group draws");
  evaluate->add_option("--config", ev_config, "Run configuration JSON")->check(CLI::ExistingFile);

  // synth
  cli::SynthOptions syn;
  std::optional<int> n_trees;
  std::optional<double> spacing, understory, density, noise, leaf_fraction, syn_wood_density;
  std::optional<std::string> degrade;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic plot with truth models");
  synth->add_option("-o,--out", syn.out_dir, "Output directory")->required();
  synth->add_option("--params", syn.params_path, "Scene parameter JSON")->check(CLI::ExistingFile);
  synth->add_option("--seed", syn.seed, "Scene seed");
  synth->add_option("--n-trees", n_trees, "Number of trees");
  synth->add_option("--spacing", spacing, "Grid spacing (m)");
  synth->add_option("--understory", understory, "Understory points per tree point");
  synth->add_option("--density", density, "Wood points per m^2 of bark");
  synth->add_option("--noise", noise, "Radial noise sigma (m)");
  synth->add_option("--leaf-fraction", leaf_fraction, "Leaf points per wood point");
  synth->add_option("--wood-density", syn_wood_density, "Wood density for truth AGB (kg/m^3)");
  synth->add_option("--degrade", degrade, "uls_topdown, sparsify or crop_below")
      ->check(CLI::IsMember({"uls_topdown", "sparsify", "crop_below"}));
  synth->add_option("--keep-fraction", syn.degrade_params.keep_fraction, "sparsify: kept fraction");
  synth->add_option("--crop-height", syn.degrade_params.crop_height, "crop_below: cutoff above ground (m)");
  synth->add_option("--uls-decay", syn.degrade_params.uls_decay, "uls_topdown: depth scale (m)");
  synth->add_option("--uls-floor", syn.degrade_params.uls_floor, "uls_topdown: minimum keep probability");
  synth->add_option("--format", syn.cloud_ext, "Cloud file extension")
      ->check(CLI::IsMember({".xyz", ".ply", ".txt"}));

  CLI11_PARSE(app, argc, argv);

  if (segment->parsed()) {
    seg.config_path = seg_flags.config;
    seg.overrides = seg_flags.overrides();
    return cli::cmd_segment(seg, std::cout, std::cerr);
  }
  if (reconstruct->parsed()) {
    rec.config_path = rec_flags.config;
    json o = rec_flags.overrides();
    if (leaf_on) o["leaf_on"] = true;
    if (freq_threshold) o["freq_threshold"] = *freq_threshold;
    if (wood_density) o["wood_density"] = *wood_density;
    if (dbh) o["dbh_m"] = *dbh;
    if (!allometry.empty()) o["dbh_allometry"] = allometry;
    if (dbh_source) o["dbh_source"] = *dbh_source;
    else if (dbh || rec.dbh_csv) o["dbh_source"] = "measured";
    rec.overrides = std::move(o);
    return cli::cmd_reconstruct(rec, std::cout, std::cerr);
  }
  if (evaluate->parsed()) {
    ev.config_path = ev_config;
    if (repeats) ev.overrides["n_repeats"] = *repeats;
    if (ev_seed) ev.overrides["seed"] = *ev_seed;
    return cli::cmd_evaluate(ev, std::cout, std::cerr);
  }
  if (synth->parsed()) {
    json o = json::object();
    if (n_trees) o["n_trees"] = *n_trees;
    if (spacing) o["spacing"] = *spacing;
    if (understory) o["understory_fraction"] = *understory;
    if (syn_wood_density) o["wood_density"] = *syn_wood_density;
    if (density) o["sampling"]["density"] = *density;
    if (noise) o["sampling"]["noise"] = *noise;
    if (leaf_fraction) o["sampling"]["leaf_fraction"] = *leaf_fraction;
    syn.overrides = std::move(o);
    if (degrade) {
      try {
        syn.degrade = degrade_mode_from_string(*degrade);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kUsage;
      }
    }
    return cli::cmd_synth(syn, std::cout, std::cerr);
  }
  return cli::kUsage;
}
