#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

namespace treegraph {

enum class DbhSource { Measured, Estimated, Allometric };

enum class FrequencyCorrection { Anomaly, Literal };

enum class PathingMode { SteepestDescent, LowestRoot };

/// Tip used to key clusters: the farthest terminal of the node's subtree,
/// or that tip unified over connected root-distance bands.
enum class TipMode { Subtree, Band };

/// Skeleton parent of a cluster: the next cluster on its representative's
/// root path, or the same-tip cluster in the next bin toward the root when one exists.
enum class ParentRule { Path, TipChain };

/// Run configuration. Precedence is defaults < config file < command line.
struct RunConfig {
  // graph construction
  int k = 10;
  // skeleton abstraction
  double alpha = 20.0;
  int n_bins = 100;
  double freq_threshold = 0.0;
  bool leaf_on = false;
  FrequencyCorrection freq_correction = FrequencyCorrection::Anomaly;
  TipMode tip_mode = TipMode::Band;
  double band_width = 0.2;  // meters; 0 = derived from the median edge length
  double min_branch_length = 0.0;  // meters; shorter twigs join their parent branch
  ParentRule parent_rule = ParentRule::TipChain;
  // tree model
  std::optional<double> wood_density;  // kg/m^3
  DbhSource dbh_source = DbhSource::Estimated;
  std::optional<double> dbh_m;  // measured DBH for single-tree runs
  std::optional<std::pair<double, double>> dbh_allometry;  // dbh_cm = a * h^b
  std::optional<double> ground_z;  // ground elevation for breast height
  double gamma_single = 1.5;
  double gamma_multi = 0.4;
  double min_radius = 0.002;
  int radial_segments = 16;
  int samples_per_edge = 5;
  int ransac_iterations = 200;
  double ransac_tolerance = 0.02;
  // segmentation
  double min_tree_height = 3.0;
  int min_tree_points = 1000;
  double merge_distance = 0.5;
  double attach_height = 2.0;  // 0 disables fragment reattachment
  PathingMode pathing = PathingMode::LowestRoot;
  // evaluation
  int n_repeats = 100;
  std::uint64_t seed = 42;

  /// Throws ConfigError on an invalid combination.
  void validate() const;
};

/// Overlays the keys present in `j` onto `cfg`. Unknown keys are an error.
void apply_config_json(RunConfig& cfg, const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg);

std::string to_string(DbhSource s);
DbhSource dbh_source_from_string(const std::string& s);

}  // namespace treegraph
