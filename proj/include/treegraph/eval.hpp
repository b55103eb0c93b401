#pragma once

#include "treegraph/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace treegraph {

struct EvalRecord {
  std::string tree_id;
  double estimated_kg = 0.0;
  double reference_kg = 0.0;
};

using EvalSeries = std::vector<EvalRecord>;

/// Mean absolute deviation in Mg (inputs in kg).
double mad(const EvalSeries& series);

/// Mean absolute percentage deviation, percent.
double mapd(const EvalSeries& series);

struct Regression {
  double r2 = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares of estimated on reference.
Regression regress(const EvalSeries& series);

struct GroupStat {
  int size = 0;
  double mean_pct = 0.0;
  double std_pct = 0.0;  // population standard deviation over draws
};

/// Deviation of summed biomass over random tree groups. Each draw samples
/// `size` distinct records; draws are independent.
std::vector<GroupStat> cumulative_groups(const EvalSeries& series, const std::vector<int>& sizes,
                                         int n_repeats, std::uint64_t seed);

inline const std::vector<int> kDefaultGroupSizes{5, 10, 15, 20, 25, 30};

struct EvalReport {
  std::size_t n = 0;
  double mad_mg = 0.0;
  double mapd_pct = 0.0;
  std::optional<Regression> regression;
  std::vector<double> residuals_kg;  // estimated - reference
  std::vector<GroupStat> groups;
};

EvalReport evaluate(const EvalSeries& series, bool cumulative, int n_repeats, std::uint64_t seed);
nlohmann::json report_to_json(const EvalReport& report, const EvalSeries& series);
std::string report_table(const EvalReport& report);

/// Reads "tree_id,agb_est_kg,agb_ref_kg" rows; a header row is allowed.
EvalSeries load_pairs_csv(const std::string& path);

/// Scatter of estimated against reference biomass with the 1:1 line.
std::string scatter_svg(const EvalSeries& series);

}  // namespace treegraph
