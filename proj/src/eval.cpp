#include "treegraph/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

namespace treegraph {

namespace {

void require_nonempty(const EvalSeries& s) {
  if (s.empty()) throw Error("evaluation series is empty");
}

}  // namespace

double mad(const EvalSeries& series) {
  require_nonempty(series);
  double sum = 0.0;
  for (const auto& r : series) sum += std::abs(r.estimated_kg - r.reference_kg);
  return sum / static_cast<double>(series.size()) / 1000.0;
}

double mapd(const EvalSeries& series) {
  require_nonempty(series);
  double sum = 0.0;
  for (const auto& r : series) {
    if (!(r.reference_kg > 0.0))
      throw Error("reference biomass must be positive (tree " + r.tree_id + ")");
    sum += std::abs(r.estimated_kg - r.reference_kg) / r.reference_kg;
  }
  return 100.0 * sum / static_cast<double>(series.size());
}

Regression regress(const EvalSeries& series) {
  if (series.size() < 2) throw Error("regression needs at least two records");
  const auto n = static_cast<double>(series.size());
  double mx = 0.0, my = 0.0;
  for (const auto& r : series) {
    mx += r.reference_kg;
    my += r.estimated_kg;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& r : series) {
    const double dx = r.reference_kg - mx, dy = r.estimated_kg - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw Error("reference biomass has zero variance");
  Regression g;
  g.slope = sxy / sxx;
  g.intercept = my - g.slope * mx;
  double ss_res = 0.0;
  for (const auto& r : series) {
    const double e = r.estimated_kg - (g.intercept + g.slope * r.reference_kg);
    ss_res += e * e;
  }
  g.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return g;
}

std::vector<GroupStat> cumulative_groups(const EvalSeries& series, const std::vector<int>& sizes,
                                         int n_repeats, std::uint64_t seed) {
  require_nonempty(series);
  if (n_repeats < 1) throw Error("n_repeats must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(series.size());
  std::vector<GroupStat> out;
  for (const int g : sizes) {
    if (g < 1 || static_cast<std::size_t>(g) > series.size())
      throw Error("group size " + std::to_string(g) + " exceeds the " +
                  std::to_string(series.size()) + " available records");
    std::vector<double> dev;
    dev.reserve(static_cast<std::size_t>(n_repeats));
    for (int rep = 0; rep < n_repeats; ++rep) {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      // partial Fisher-Yates: the first g slots are the draw
      for (std::size_t i = 0; i < static_cast<std::size_t>(g); ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
      }
      double sa = 0.0, sd = 0.0;
      for (std::size_t i = 0; i < static_cast<std::size_t>(g); ++i) {
        sa += series[idx[i]].estimated_kg;
        sd += series[idx[i]].reference_kg;
      }
      dev.push_back(std::abs(sa - sd) / sd * 100.0);
    }
    const double mean = std::accumulate(dev.begin(), dev.end(), 0.0) / dev.size();
    double var = 0.0;
    for (const double d : dev) var += (d - mean) * (d - mean);
    out.push_back({g, mean, std::sqrt(var / dev.size())});
  }
  return out;
}

EvalReport evaluate(const EvalSeries& series, bool cumulative, int n_repeats, std::uint64_t seed) {
  EvalReport r;
  r.n = series.size();
  r.mad_mg = mad(series);
  r.mapd_pct = mapd(series);
  if (series.size() >= 2) {
    try {
      r.regression = regress(series);
    } catch (const Error&) {
      r.regression.reset();
    }
  }
  for (const auto& rec : series) r.residuals_kg.push_back(rec.estimated_kg - rec.reference_kg);
  if (cumulative) {
    std::vector<int> sizes;
    for (const int g : kDefaultGroupSizes)
      if (static_cast<std::size_t>(g) <= series.size()) sizes.push_back(g);
    r.groups = cumulative_groups(series, sizes, n_repeats, seed);
  }
  return r;
}

nlohmann::json report_to_json(const EvalReport& report, const EvalSeries& series) {
  nlohmann::json j;
  j["n"] = report.n;
  j["mad_mg"] = report.mad_mg;
  j["mapd_pct"] = report.mapd_pct;
  if (report.regression) {
    j["r2"] = report.regression->r2;
    j["slope"] = report.regression->slope;
    j["intercept"] = report.regression->intercept;
  } else {
    j["r2"] = nullptr;
    j["slope"] = nullptr;
    j["intercept"] = nullptr;
  }
  auto& recs = j["records"] = nlohmann::json::array();
  for (std::size_t i = 0; i < series.size(); ++i)
    recs.push_back({{"tree_id", series[i].tree_id},
                    {"agb_est_kg", series[i].estimated_kg},
                    {"agb_ref_kg", series[i].reference_kg},
                    {"residual_kg", report.residuals_kg[i]}});
  if (!report.groups.empty()) {
    auto& g = j["cumulative"] = nlohmann::json::array();
    for (const auto& s : report.groups)
      g.push_back({{"group_size", s.size}, {"mean_pct", s.mean_pct}, {"std_pct", s.std_pct}});
  }
  return j;
}

std::string report_table(const EvalReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << "trees      " << report.n << "\n";
  os << "MAD (Mg)   " << report.mad_mg << "\n";
  os << "MAPD (%)   " << std::setprecision(2) << report.mapd_pct << "\n";
  if (report.regression) {
    os << std::setprecision(4);
    os << "R2         " << report.regression->r2 << "\n";
    os << "slope      " << report.regression->slope << "\n";
    os << "intercept  " << report.regression->intercept << "\n";
  }
  if (!report.groups.empty()) {
    os << "\ngroup  mean (%)  std (%)\n" << std::setprecision(2);
    for (const auto& g : report.groups)
      os << std::setw(5) << g.size << "  " << std::setw(8) << g.mean_pct << "  " << std::setw(7)
         << g.std_pct << "\n";
  }
  return os.str();
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && std::isfinite(out);
}

}  // namespace

EvalSeries load_pairs_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  EvalSeries out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(trim(cell));
    if (f.size() < 3) throw ParseError("expected tree_id,agb_est_kg,agb_ref_kg", lineno);
    EvalRecord r;
    r.tree_id = f[0];
    const bool ok = parse_double(f[1], r.estimated_kg) && parse_double(f[2], r.reference_kg);
    if (!ok) {
      if (out.empty() && lineno == 1) continue;  // header
      throw ParseError("non-numeric biomass value", lineno);
    }
    out.push_back(std::move(r));
  }
  if (out.empty()) throw ParseError("no records", lineno == 0 ? 1 : lineno);
  return out;
}

std::string scatter_svg(const EvalSeries& series) {
  double hi = 0.0;
  for (const auto& r : series) hi = std::max({hi, r.estimated_kg, r.reference_kg});
  if (hi <= 0.0) hi = 1.0;
  hi *= 1.05;
  constexpr double size = 400.0, pad = 50.0;
  auto sx = [&](double v) { return pad + v / hi * (size - 2 * pad); };
  auto sy = [&](double v) { return size - pad - v / hi * (size - 2 * pad); };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
     << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(hi) << "\" y2=\"" << sy(hi)
     << "\" stroke=\"gray\" stroke-dasharray=\"4\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << size - pad << "\" x2=\"" << size - pad << "\" y2=\""
     << size - pad << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << size - pad
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << size / 2 << "\" y=\"" << size - 12
     << "\" text-anchor=\"middle\" font-size=\"12\">reference AGB (kg)</text>\n";
  os << "<text x=\"14\" y=\"" << size / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
     << "transform=\"rotate(-90 14 " << size / 2 << ")\">estimated AGB (kg)</text>\n";
  for (const auto& r : series)
    os << "<circle cx=\"" << sx(r.reference_kg) << "\" cy=\"" << sy(r.estimated_kg)
       << "\" r=\"3\" fill=\"steelblue\"/>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace treegraph
