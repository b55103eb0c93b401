#include "treegraph/config.hpp"

#include "treegraph/types.hpp"

#include <cmath>
#include <fstream>

namespace treegraph {

namespace {

const char* to_string(FrequencyCorrection c) {
  return c == FrequencyCorrection::Anomaly ? "anomaly" : "literal";
}

const char* to_string(PathingMode m) {
  return m == PathingMode::SteepestDescent ? "steepest_descent" : "lowest_root";
}

template <typename T>
T get_as(const nlohmann::json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

std::optional<double> optional_double(const nlohmann::json& v, const std::string& key) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number or null");
  return v.get<double>();
}

}  // namespace

std::string to_string(DbhSource s) {
  switch (s) {
    case DbhSource::Measured: return "measured";
    case DbhSource::Estimated: return "estimated";
    case DbhSource::Allometric: return "allometric";
  }
  return "estimated";
}

DbhSource dbh_source_from_string(const std::string& s) {
  if (s == "measured") return DbhSource::Measured;
  if (s == "estimated") return DbhSource::Estimated;
  if (s == "allometric") return DbhSource::Allometric;
  throw ConfigError("dbh_source must be measured, estimated or allometric, got '" + s + "'");
}

void RunConfig::validate() const {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (n_bins < 2) throw ConfigError("n_bins must be at least 2");
  if (!(freq_threshold >= 0.0)) throw ConfigError("freq_threshold must be non-negative");
  if (!(band_width >= 0.0)) throw ConfigError("band_width must be non-negative");
  if (!(min_branch_length >= 0.0)) throw ConfigError("min_branch_length must be non-negative");
  if (wood_density && !(*wood_density > 0.0)) throw ConfigError("wood_density must be positive");
  if (dbh_m && !(*dbh_m > 0.0)) throw ConfigError("dbh_m must be positive");
  if (dbh_source == DbhSource::Allometric && !dbh_allometry)
    throw ConfigError("dbh_source allometric needs dbh_allometry coefficients");
  if (dbh_allometry && !(dbh_allometry->first > 0.0 && std::isfinite(dbh_allometry->second)))
    throw ConfigError("dbh_allometry needs a > 0 and a finite b");
  if (!(gamma_single > 0.0) || !(gamma_multi > 0.0)) throw ConfigError("gamma exponents must be positive");
  if (!(min_radius > 0.0)) throw ConfigError("min_radius must be positive");
  if (radial_segments < 3) throw ConfigError("radial_segments must be at least 3");
  if (samples_per_edge < 0) throw ConfigError("samples_per_edge must be non-negative");
  if (ransac_iterations < 1) throw ConfigError("ransac_iterations must be at least 1");
  if (!(ransac_tolerance > 0.0)) throw ConfigError("ransac_tolerance must be positive");
  if (!(min_tree_height > 0.0)) throw ConfigError("min_tree_height must be positive");
  if (min_tree_points < 1) throw ConfigError("min_tree_points must be at least 1");
  if (!(merge_distance >= 0.0)) throw ConfigError("merge_distance must be non-negative");
  if (!(attach_height >= 0.0)) throw ConfigError("attach_height must be non-negative");
  if (n_repeats < 1) throw ConfigError("n_repeats must be at least 1");
}

void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "k") cfg.k = get_as<int>(v, key);
    else if (key == "alpha") cfg.alpha = get_as<double>(v, key);
    else if (key == "n_bins") cfg.n_bins = get_as<int>(v, key);
    else if (key == "freq_threshold") cfg.freq_threshold = get_as<double>(v, key);
    else if (key == "leaf_on") cfg.leaf_on = get_as<bool>(v, key);
    else if (key == "freq_correction") {
      const auto s = get_as<std::string>(v, key);
      if (s == "anomaly") cfg.freq_correction = FrequencyCorrection::Anomaly;
      else if (s == "literal") cfg.freq_correction = FrequencyCorrection::Literal;
      else throw ConfigError("freq_correction must be anomaly or literal");
    } else if (key == "tip_mode") {
      const auto s = get_as<std::string>(v, key);
      if (s == "subtree") cfg.tip_mode = TipMode::Subtree;
      else if (s == "band") cfg.tip_mode = TipMode::Band;
      else throw ConfigError("tip_mode must be subtree or band");
    } else if (key == "parent_rule") {
      const auto s = get_as<std::string>(v, key);
      if (s == "path") cfg.parent_rule = ParentRule::Path;
      else if (s == "tip_chain") cfg.parent_rule = ParentRule::TipChain;
      else throw ConfigError("parent_rule must be path or tip_chain");
    } else if (key == "band_width") cfg.band_width = get_as<double>(v, key);
    else if (key == "min_branch_length") cfg.min_branch_length = get_as<double>(v, key);
    else if (key == "wood_density") cfg.wood_density = optional_double(v, key);
    else if (key == "dbh_source") cfg.dbh_source = dbh_source_from_string(get_as<std::string>(v, key));
    else if (key == "dbh_m") cfg.dbh_m = optional_double(v, key);
    else if (key == "dbh_allometry") {
      if (v.is_null()) cfg.dbh_allometry.reset();
      else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        cfg.dbh_allometry = std::make_pair(v[0].get<double>(), v[1].get<double>());
      else throw ConfigError("dbh_allometry must be [a, b]");
    } else if (key == "ground_z") cfg.ground_z = optional_double(v, key);
    else if (key == "gamma_single") cfg.gamma_single = get_as<double>(v, key);
    else if (key == "gamma_multi") cfg.gamma_multi = get_as<double>(v, key);
    else if (key == "min_radius") cfg.min_radius = get_as<double>(v, key);
    else if (key == "radial_segments") cfg.radial_segments = get_as<int>(v, key);
    else if (key == "samples_per_edge") cfg.samples_per_edge = get_as<int>(v, key);
    else if (key == "ransac_iterations") cfg.ransac_iterations = get_as<int>(v, key);
    else if (key == "ransac_tolerance") cfg.ransac_tolerance = get_as<double>(v, key);
    else if (key == "min_tree_height") cfg.min_tree_height = get_as<double>(v, key);
    else if (key == "min_tree_points") cfg.min_tree_points = get_as<int>(v, key);
    else if (key == "merge_distance") cfg.merge_distance = get_as<double>(v, key);
    else if (key == "attach_height") cfg.attach_height = get_as<double>(v, key);
    else if (key == "pathing") {
      const auto s = get_as<std::string>(v, key);
      if (s == "steepest_descent") cfg.pathing = PathingMode::SteepestDescent;
      else if (s == "lowest_root") cfg.pathing = PathingMode::LowestRoot;
      else throw ConfigError("pathing must be steepest_descent or lowest_root");
    } else if (key == "n_repeats") cfg.n_repeats = get_as<int>(v, key);
    else if (key == "seed") cfg.seed = get_as<std::uint64_t>(v, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  RunConfig cfg;
  apply_config_json(cfg, j);
  cfg.validate();
  return cfg;
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["k"] = cfg.k;
  j["alpha"] = cfg.alpha;
  j["n_bins"] = cfg.n_bins;
  j["freq_threshold"] = cfg.freq_threshold;
  j["leaf_on"] = cfg.leaf_on;
  j["freq_correction"] = to_string(cfg.freq_correction);
  j["tip_mode"] = cfg.tip_mode == TipMode::Band ? "band" : "subtree";
  j["parent_rule"] = cfg.parent_rule == ParentRule::TipChain ? "tip_chain" : "path";
  j["band_width"] = cfg.band_width;
  j["min_branch_length"] = cfg.min_branch_length;
  j["wood_density"] = opt(cfg.wood_density);
  j["dbh_source"] = to_string(cfg.dbh_source);
  j["dbh_m"] = opt(cfg.dbh_m);
  j["dbh_allometry"] = cfg.dbh_allometry
                           ? json::array({cfg.dbh_allometry->first, cfg.dbh_allometry->second})
                           : json(nullptr);
  j["ground_z"] = opt(cfg.ground_z);
  j["gamma_single"] = cfg.gamma_single;
  j["gamma_multi"] = cfg.gamma_multi;
  j["min_radius"] = cfg.min_radius;
  j["radial_segments"] = cfg.radial_segments;
  j["samples_per_edge"] = cfg.samples_per_edge;
  j["ransac_iterations"] = cfg.ransac_iterations;
  j["ransac_tolerance"] = cfg.ransac_tolerance;
  j["min_tree_height"] = cfg.min_tree_height;
  j["min_tree_points"] = cfg.min_tree_points;
  j["merge_distance"] = cfg.merge_distance;
  j["attach_height"] = cfg.attach_height;
  j["pathing"] = to_string(cfg.pathing);
  j["n_repeats"] = cfg.n_repeats;
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace treegraph
