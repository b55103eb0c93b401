#pragma once

#include "treegraph/config.hpp"
#include "treegraph/synth.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace treegraph::cli {

enum ExitCode { kOk = 0, kTreeFailures = 1, kUsage = 2 };

/// Defaults, then the config file, then the flag overrides (config keys).
RunConfig effective_config(const std::string& config_path, const nlohmann::json& overrides);

struct SegmentOptions {
  std::string input;
  std::string out_dir;
  std::string config_path;
  nlohmann::json overrides = nlohmann::json::object();
};

struct ReconstructOptions {
  std::vector<std::string> inputs;  // tree clouds, segment manifests or (fused) scene clouds
  std::string out_dir;
  std::string config_path;
  nlohmann::json overrides = nlohmann::json::object();
  bool segment = false;  // inputs are whole scenes
  bool mesh = false;
  bool labels = false;
  std::optional<std::string> dbh_csv;
  std::optional<int> tree_id;  // id for a single tree cloud
};

struct EvaluateOptions {
  std::string pairs;
  std::string output;  // report JSON; empty = stdout only
  std::string config_path;
  nlohmann::json overrides = nlohmann::json::object();
  bool cumulative = false;
  std::string plot;  // SVG path
};

struct SynthOptions {
  std::string out_dir;
  std::string params_path;
  nlohmann::json overrides = nlohmann::json::object();  // SceneParams keys
  std::uint64_t seed = 42;
  std::optional<DegradeMode> degrade;
  DegradeParams degrade_params;
  std::string cloud_ext = ".xyz";
};

int cmd_segment(const SegmentOptions& opts, std::ostream& out, std::ostream& err);
int cmd_reconstruct(const ReconstructOptions& opts, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace treegraph::cli
