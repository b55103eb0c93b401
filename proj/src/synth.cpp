#include "treegraph/synth.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <variant>

namespace treegraph {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Orthonormal pair perpendicular to the unit vector `d`.
std::pair<Vec3, Vec3> frame(const Vec3& d) {
  const Vec3 a = std::abs(d.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 u = d.cross(a).normalized();
  return {u, d.cross(u)};
}

// Direction at `angle` from `axis`, rotated `azimuth` around it.
Vec3 deflect(const Vec3& axis, double angle, double azimuth) {
  const auto [u, v] = frame(axis);
  return (std::cos(angle) * axis +
          std::sin(angle) * (std::cos(azimuth) * u + std::sin(azimuth) * v))
      .normalized();
}

// Lifts `d` to at least `elevation` above the horizontal, keeping its azimuth.
Vec3 lift(const Vec3& d, double elevation) {
  const double lo = std::sin(elevation);
  if (d.z() >= lo) return d;
  Vec3 h(d.x(), d.y(), 0.0);
  if (h.norm() < 1e-12) h = Vec3::UnitX();
  return (std::cos(elevation) * h.normalized() + lo * Vec3::UnitZ()).normalized();
}

// Numeric fields of a parameter struct, for JSON round trips.
template <typename Fields>
nlohmann::json fields_to_json(const Fields& fields) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, ptr] : fields) std::visit([&](auto* p) { j[name] = *p; }, ptr);
  return j;
}

template <typename Fields>
void fields_from_json(const Fields& fields, const nlohmann::json& j, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    bool found = false;
    for (const auto& [name, ptr] : fields) {
      if (key != name) continue;
      found = true;
      std::visit(
          [&](auto* p) {
            if (!v.is_number()) throw ConfigError(std::string(what) + "." + key + " must be a number");
            *p = v.template get<std::remove_pointer_t<decltype(p)>>();
          },
          ptr);
    }
    if (!found) throw ConfigError(std::string("unknown ") + what + " key '" + key + "'");
  }
}

using FieldPtr = std::variant<int*, double*>;
using FieldList = std::vector<std::pair<std::string, FieldPtr>>;

FieldList tree_fields(TreeParams& p) {
  return {{"depth", &p.depth},
          {"branching", &p.branching},
          {"height", &p.height},
          {"dbh", &p.dbh},
          {"lean", &p.lean},
          {"crown_base", &p.crown_base},
          {"whorls", &p.whorls},
          {"segment_length", &p.segment_length},
          {"branch_length", &p.branch_length},
          {"length_decay", &p.length_decay},
          {"angle_min", &p.angle_min},
          {"angle_max", &p.angle_max},
          {"azimuth_jitter", &p.azimuth_jitter},
          {"bend", &p.bend},
          {"min_elevation", &p.min_elevation},
          {"gamma_single", &p.gamma_single},
          {"gamma_multi", &p.gamma_multi},
          {"min_radius", &p.min_radius}};
}

FieldList sampling_fields(SamplingParams& p) {
  return {{"density", &p.density},
          {"noise", &p.noise},
          {"leaf_fraction", &p.leaf_fraction},
          {"leaf_radius", &p.leaf_radius},
          {"leaf_height", &p.leaf_height}};
}

void validate(const TreeParams& p) {
  if (p.depth < 0 || p.branching < 1 || p.whorls < 1) throw ConfigError("invalid tree topology params");
  if (!(p.height > 2.0)) throw ConfigError("tree height must exceed 2 m");
  if (!(p.dbh > 0.0) || !(p.segment_length > 0.0) || !(p.branch_length > 0.0))
    throw ConfigError("tree dbh, segment_length and branch_length must be positive");
  if (!(p.crown_base > 0.0 && p.crown_base < 0.9)) throw ConfigError("crown_base must be in (0, 0.9)");
  if (!(p.length_decay > 0.0 && p.length_decay < 1.0)) throw ConfigError("length_decay must be in (0, 1)");
  if (!(p.angle_min <= p.angle_max)) throw ConfigError("angle_min must not exceed angle_max");
  if (!(p.lean >= 0.0 && p.lean < 45.0)) throw ConfigError("lean must be in [0, 45)");
  if (!(p.min_elevation >= -90.0 && p.min_elevation < 60.0))
    throw ConfigError("min_elevation must be in [-90, 60)");
}

class TreeBuilder {
 public:
  TreeBuilder(const TreeParams& p, Rng& rng) : p_(p), rng_(rng) {}

  SyntheticTree build() {
    SyntheticTree t;
    const double lean = p_.lean * kDeg;
    const Vec3 axis = deflect(Vec3::UnitZ(), lean, uniform(rng_, 0.0, 2.0 * std::numbers::pi));
    const double len = p_.height / std::cos(lean);
    const double s_bh = 1.3 / std::cos(lean);

    std::vector<double> stops{0.0, s_bh, len};
    std::vector<double> whorl_s;
    if (p_.depth > 0) {
      for (int k = 0; k < p_.whorls; ++k) {
        const double f = p_.whorls == 1 ? 0.0 : static_cast<double>(k) / (p_.whorls - 1);
        whorl_s.push_back(len * (p_.crown_base + (0.9 - p_.crown_base) * f));
      }
      stops.insert(stops.end(), whorl_s.begin(), whorl_s.end());
    }
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                stops.end());

    nodes_.push_back({Vec3::Zero(), kNoNode});
    std::vector<double> trunk_s{0.0};
    std::vector<std::uint32_t> trunk{0};
    for (std::size_t i = 1; i < stops.size(); ++i) {
      const double gap = stops[i] - stops[i - 1];
      const int pieces = std::max(1, static_cast<int>(std::ceil(gap / p_.segment_length - 1e-9)));
      for (int q = 1; q <= pieces; ++q) {
        const double s = q == pieces ? stops[i] : stops[i - 1] + gap * q / pieces;
        trunk.push_back(add_node(s * axis, trunk.back()));
        trunk_s.push_back(s);
        if (std::abs(s - s_bh) < 1e-9) breast_ = trunk.back();
      }
    }
    // exact breast height despite the tilt
    nodes_[breast_].pos = s_bh * axis;
    nodes_[breast_].pos.z() = 1.3;

    const double azimuth0 = uniform(rng_, 0.0, 2.0 * std::numbers::pi);
    for (std::size_t k = 0; k < whorl_s.size(); ++k) {
      std::size_t at = 0;
      while (std::abs(trunk_s[at] - whorl_s[k]) > 1e-9) ++at;
      const double rel = whorl_s.size() == 1 ? 0.0 : static_cast<double>(k) / (whorl_s.size() - 1);
      const double length = p_.branch_length * (1.0 - 0.55 * rel);
      for (int j = 0; j < p_.branching; ++j) {
        const double az = azimuth0 + k * 0.8 + 2.0 * std::numbers::pi * j / p_.branching +
                          uniform(rng_, -p_.azimuth_jitter, p_.azimuth_jitter) * kDeg;
        const double angle = uniform(rng_, p_.angle_min, p_.angle_max) * kDeg;
        branch(trunk[at], deflect(axis, angle, az), length * uniform(rng_, 0.85, 1.15), 1);
      }
    }

    t.params = p_;
    t.breast_node = breast_;
    t.skeleton.root = 0;
    t.skeleton.nodes.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      t.skeleton.nodes[i].pos = nodes_[i].pos;
      t.skeleton.nodes[i].parent = nodes_[i].parent;
    }
    assign_truth_radii(t);
    for (const auto& [c, dir] : collars_) {
      const auto par = t.skeleton.nodes[c].parent;
      t.skeleton.nodes[c].pos = t.skeleton.nodes[par].pos + t.skeleton.nodes[par].radius * dir;
    }
    assign_truth_radii(t);
    return t;
  }

 private:
  struct Raw {
    Vec3 pos;
    std::uint32_t parent;
  };

  std::uint32_t add_node(const Vec3& pos, std::uint32_t parent) {
    nodes_.push_back({pos, parent});
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  void branch(std::uint32_t start, Vec3 dir, double length, int level) {
    dir = lift(dir, p_.min_elevation * kDeg);
    // a short collar ends at the parent surface; its length is fixed once
    // the parent radius is known
    const std::uint32_t collar = add_node(nodes_[start].pos + 0.05 * dir, start);
    collars_.push_back({collar, dir});
    const int pieces = std::max(1, static_cast<int>(std::lround(length / p_.segment_length)));
    const double step = length / pieces;
    std::vector<std::uint32_t> chain{collar};
    for (int q = 0; q < pieces; ++q) {
      if (q > 0)
        dir = lift(deflect(dir, uniform(rng_, 0.0, p_.bend) * kDeg, uniform(rng_, 0.0, 2.0 * std::numbers::pi)),
                   p_.min_elevation * kDeg);
      chain.push_back(add_node(nodes_[chain.back()].pos + step * dir, chain.back()));
    }
    if (level >= p_.depth || pieces < 2) return;
    const double az0 = uniform(rng_, 0.0, 2.0 * std::numbers::pi);
    for (int j = 0; j < p_.branching; ++j) {
      // interior chain nodes, spread evenly
      const auto at = static_cast<std::size_t>(
          std::clamp<long>(std::lround(static_cast<double>(j + 1) * pieces / (p_.branching + 1)), 1, pieces - 1));
      const Vec3 axis = (nodes_[chain[at + 1]].pos - nodes_[chain[at]].pos).normalized();
      const double angle = uniform(rng_, p_.angle_min, p_.angle_max) * kDeg;
      const double az = az0 + j * 137.5 * kDeg;
      branch(chain[at], deflect(axis, angle, az), length * p_.length_decay * uniform(rng_, 0.85, 1.15),
             level + 1);
    }
  }

  // Radii from the ratio of supported subtree lengths. Nodes are stored
  // parents-first, so one reverse sweep gives the lengths.
  void assign_truth_radii(SyntheticTree& t) const {
    auto& nodes = t.skeleton.nodes;
    const std::size_t n = nodes.size();
    std::vector<double> l(n, 0.0);
    std::vector<int> kids(n, 0);
    for (std::size_t v = n; v-- > 1;) {
      const auto par = nodes[v].parent;
      l[v] += (nodes[v].pos - nodes[par].pos).norm();
      l[par] += l[v];
      ++kids[par];
    }
    const double base = 0.5 * p_.dbh;
    for (std::size_t v = 0; v < n; ++v) {
      if (v <= breast_) {  // root, trunk up to and including the anchor
        nodes[v].radius = base;
        continue;
      }
      const auto par = nodes[v].parent;
      const double gamma = kids[par] == 1 ? p_.gamma_single : p_.gamma_multi;
      nodes[v].radius = std::max(p_.min_radius, nodes[par].radius * std::pow(l[v] / l[par], gamma));
    }
  }

  const TreeParams& p_;
  Rng& rng_;
  std::vector<Raw> nodes_;
  std::vector<std::pair<std::uint32_t, Vec3>> collars_;
  std::uint32_t breast_ = 0;
};

// Radial distance to the edge axis and the frustum radius there, or a
// negative value when the point projects outside the edge.
bool inside_frustum(const Vec3& q, const Vec3& a, const Vec3& b, double ra, double rb) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return false;
  const double t = (q - a).dot(ab) / len2;
  if (t <= 0.0 || t >= 1.0) return false;
  const double r = ra + (rb - ra) * t;
  return (q - (a + t * ab)).norm() < r - 1e-9;
}

}  // namespace

nlohmann::json TreeParams::to_json() const {
  auto copy = *this;
  return fields_to_json(tree_fields(copy));
}

TreeParams TreeParams::from_json(const nlohmann::json& j) {
  TreeParams p;
  fields_from_json(tree_fields(p), j, "tree");
  return p;
}

nlohmann::json SamplingParams::to_json() const {
  auto copy = *this;
  return fields_to_json(sampling_fields(copy));
}

SamplingParams SamplingParams::from_json(const nlohmann::json& j) {
  SamplingParams p;
  fields_from_json(sampling_fields(p), j, "sampling");
  return p;
}

double SyntheticTree::height_m() const {
  if (!cloud.empty()) {
    double lo = cloud.points[0].z(), hi = lo;
    for (const Vec3& p : cloud.points) {
      lo = std::min(lo, p.z());
      hi = std::max(hi, p.z());
    }
    return hi - lo;
  }
  double lo = skeleton.nodes[0].pos.z(), hi = lo;
  for (const auto& n : skeleton.nodes) {
    lo = std::min(lo, n.pos.z());
    hi = std::max(hi, n.pos.z());
  }
  return hi - lo;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SyntheticTree generate_tree(const TreeParams& params, std::uint64_t seed) {
  validate(params);
  Rng rng(seed);
  TreeBuilder builder(params, rng);
  SyntheticTree t = builder.build();
  t.seed = seed;
  t.volume_m3 = frustum_volume(t.skeleton);
  return t;
}

double frustum_volume(const SkeletonGraph& skeleton) {
  double v = 0.0;
  for (const auto& n : skeleton.nodes) {
    if (n.parent == kNoNode) continue;
    const auto& p = skeleton.nodes[n.parent];
    const double h = (n.pos - p.pos).norm();
    const double R = p.radius, r = n.radius;
    v += std::numbers::pi * h * (R * R + R * r + r * r) / 3.0;
  }
  return v;
}

void sample_surface(SyntheticTree& tree, const SamplingParams& s, std::uint64_t seed) {
  if (!(s.density > 0.0) || !(s.noise >= 0.0) || !(s.leaf_fraction >= 0.0))
    throw ConfigError("invalid sampling params");
  Rng rng(seed);
  const auto& nodes = tree.skeleton.nodes;
  const auto kids = tree.skeleton.children();
  tree.cloud = {};
  tree.leaf.clear();
  tree.source.clear();

  // edges touching either end of edge (par -> v), identified by child node
  auto neighbours = [&](std::uint32_t v) {
    std::vector<std::uint32_t> out;
    const auto par = nodes[v].parent;
    if (nodes[par].parent != kNoNode) out.push_back(par);
    for (const auto c : kids[par])
      if (c != v) out.push_back(c);
    for (const auto c : kids[v]) out.push_back(c);
    return out;
  };

  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::uint32_t v = 0; v < nodes.size(); ++v) {
    const auto par = nodes[v].parent;
    if (par == kNoNode) continue;
    const Vec3 a = nodes[par].pos, b = nodes[v].pos;
    const double R = nodes[par].radius, r = nodes[v].radius;
    const Vec3 ab = b - a;
    const double h = ab.norm();
    if (h <= 0.0) continue;
    const Vec3 axis = ab / h;
    const auto [u, w] = frame(axis);
    const double area = std::numbers::pi * (R + r) * std::hypot(h, R - r);
    const auto count = std::poisson_distribution<long>(s.density * area)(rng);
    const auto others = neighbours(v);
    for (long i = 0; i < count; ++i) {
      // radius-weighted position along the edge: inverse CDF of (R + (r-R) t)
      const double x = uniform(rng, 0.0, 1.0);
      double t = x;
      if (std::abs(r - R) > 1e-12) {
        const double disc = R * R + (r * r - R * R) * x;
        t = (std::sqrt(std::max(0.0, disc)) - R) / (r - R);
      }
      const double th = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      double e = 0.0;
      if (s.noise > 0.0) {
        do e = gauss(rng); while (std::abs(e) > 3.0);
      }
      const double rad = std::max(0.0, R + (r - R) * t + s.noise * e);
      const Vec3 q = a + t * ab + rad * (std::cos(th) * u + std::sin(th) * w);
      bool hidden = false;
      for (const auto o : others)
        if (inside_frustum(q, nodes[nodes[o].parent].pos, nodes[o].pos,
                           nodes[nodes[o].parent].radius, nodes[o].radius)) {
          hidden = true;
          break;
        }
      if (hidden) continue;
      tree.cloud.points.push_back(q);
      tree.leaf.push_back(0);
      tree.source.push_back(v);
    }
  }

  const auto n_leaf = static_cast<std::size_t>(std::llround(s.leaf_fraction * tree.cloud.size()));
  std::vector<std::uint32_t> tips;
  for (std::uint32_t v = 0; v < nodes.size(); ++v)
    if (kids[v].empty() && nodes[v].parent != kNoNode) tips.push_back(v);
  for (std::size_t i = 0; i < n_leaf && !tips.empty(); ++i) {
    Vec3 d;
    do d = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    while (d.squaredNorm() > 1.0);
    const Vec3 c = nodes[tips[i % tips.size()]].pos;
    tree.cloud.points.push_back(c + Vec3(s.leaf_radius * d.x(), s.leaf_radius * d.y(), s.leaf_height * d.z()));
    tree.leaf.push_back(1);
    tree.source.push_back(kNoNode);
  }
}

DegradeMode degrade_mode_from_string(const std::string& s) {
  if (s == "uls_topdown") return DegradeMode::UlsTopdown;
  if (s == "sparsify") return DegradeMode::Sparsify;
  if (s == "crop_below") return DegradeMode::CropBelow;
  throw ConfigError("degrade mode must be uls_topdown, sparsify or crop_below, got '" + s + "'");
}

std::string to_string(DegradeMode m) {
  switch (m) {
    case DegradeMode::UlsTopdown: return "uls_topdown";
    case DegradeMode::Sparsify: return "sparsify";
    case DegradeMode::CropBelow: return "crop_below";
  }
  return "sparsify";
}

std::vector<NodeId> degrade_indices(const PointCloud& cloud, DegradeMode mode,
                                    const DegradeParams& p, std::uint64_t seed) {
  std::vector<NodeId> keep;
  const auto n = static_cast<NodeId>(cloud.size());
  if (n == 0) return keep;
  Rng rng(seed);
  double lo = cloud.points[0].z(), hi = lo;
  for (const Vec3& q : cloud.points) {
    lo = std::min(lo, q.z());
    hi = std::max(hi, q.z());
  }
  switch (mode) {
    case DegradeMode::Sparsify: {
      if (!(p.keep_fraction >= 0.0 && p.keep_fraction <= 1.0))
        throw ConfigError("keep_fraction must be in [0, 1]");
      std::vector<NodeId> idx(n);
      for (NodeId i = 0; i < n; ++i) idx[i] = i;
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<std::size_t>(std::llround(p.keep_fraction * n)));
      std::sort(idx.begin(), idx.end());
      return idx;
    }
    case DegradeMode::CropBelow: {
      const double cut = p.ground_z.value_or(lo) + p.crop_height;
      for (NodeId i = 0; i < n; ++i)
        if (cloud.points[i].z() >= cut) keep.push_back(i);
      return keep;
    }
    case DegradeMode::UlsTopdown: {
      if (!(p.uls_decay > 0.0) || !(p.uls_floor >= 0.0 && p.uls_floor <= 1.0))
        throw ConfigError("invalid uls_topdown params");
      for (NodeId i = 0; i < n; ++i) {
        const double pk = std::max(p.uls_floor, std::exp(-(hi - cloud.points[i].z()) / p.uls_decay));
        if (uniform(rng, 0.0, 1.0) < pk) keep.push_back(i);
      }
      return keep;
    }
  }
  return keep;
}

PointCloud degrade(const PointCloud& cloud, DegradeMode mode, const DegradeParams& params,
                   std::uint64_t seed) {
  return cloud.subset(degrade_indices(cloud, mode, params, seed));
}

nlohmann::json SceneParams::to_json() const {
  nlohmann::json j;
  j["n_trees"] = n_trees;
  j["spacing"] = spacing;
  j["jitter"] = jitter;
  j["understory_fraction"] = understory_fraction;
  j["height_spread"] = height_spread;
  j["wood_density"] = wood_density;
  j["tree"] = tree.to_json();
  j["sampling"] = sampling.to_json();
  return j;
}

SceneParams SceneParams::from_json(const nlohmann::json& j) {
  SceneParams p;
  if (!j.is_object()) throw ConfigError("scene params must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    auto num = [&]() {
      if (!v.is_number()) throw ConfigError("scene." + key + " must be a number");
      return v.get<double>();
    };
    if (key == "n_trees") p.n_trees = static_cast<int>(num());
    else if (key == "spacing") p.spacing = num();
    else if (key == "jitter") p.jitter = num();
    else if (key == "understory_fraction") p.understory_fraction = num();
    else if (key == "height_spread") p.height_spread = num();
    else if (key == "wood_density") p.wood_density = num();
    else if (key == "tree") p.tree = TreeParams::from_json(v);
    else if (key == "sampling") p.sampling = SamplingParams::from_json(v);
    else throw ConfigError("unknown scene key '" + key + "'");
  }
  return p;
}

Scene generate_scene(const SceneParams& params, std::uint64_t seed) {
  if (params.n_trees < 1) throw ConfigError("n_trees must be at least 1");
  if (!(params.spacing > 0.0) || !(params.jitter >= 0.0) || !(params.understory_fraction >= 0.0) ||
      !(params.height_spread >= 0.0 && params.height_spread < 0.5) || !(params.wood_density > 0.0))
    throw ConfigError("invalid scene params");
  Scene scene;
  scene.params = params;
  scene.seed = seed;
  const int n = params.n_trees;
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));

  Rng layout(derive_seed(seed, 0));
  std::vector<Vec3> offsets;
  std::vector<TreeParams> tp(n, params.tree);
  for (int i = 0; i < n; ++i) {
    const double x = (i % cols) * params.spacing + uniform(layout, -params.jitter, params.jitter);
    const double y = (i / cols) * params.spacing + uniform(layout, -params.jitter, params.jitter);
    offsets.emplace_back(x, y, 0.0);
    if (n > 1) {
      const double f = 1.0 + uniform(layout, -params.height_spread, params.height_spread);
      tp[i].height *= f;
      tp[i].dbh *= 1.0 + uniform(layout, -params.height_spread, params.height_spread);
    }
  }

  scene.trees.resize(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    SyntheticTree t = generate_tree(tp[i], derive_seed(seed, 2 * i + 1));
    sample_surface(t, params.sampling, derive_seed(seed, 2 * i + 2));
    for (auto& node : t.skeleton.nodes) node.pos += offsets[i];
    for (auto& q : t.cloud.points) q += offsets[i];
    scene.trees[i] = std::move(t);
  }

  std::size_t tree_points = 0;
  for (int i = 0; i < n; ++i) {
    const auto& t = scene.trees[i];
    tree_points += t.cloud.size();
    scene.cloud.points.insert(scene.cloud.points.end(), t.cloud.points.begin(), t.cloud.points.end());
    for (const auto l : t.leaf) scene.labels.push_back({i, l});
  }

  // shrub blobs in the gaps between grid positions
  const auto under = static_cast<std::size_t>(std::llround(params.understory_fraction * tree_points));
  if (under > 0) {
    Rng rng(derive_seed(seed, 2 * static_cast<std::uint64_t>(n) + 1));
    const int rows = (n + cols - 1) / cols;
    std::vector<Vec3> centers;
    for (int r = 0; r < std::max(1, rows - 1); ++r)
      for (int c = 0; c < std::max(1, cols - 1); ++c)
        centers.emplace_back((c + 0.5) * params.spacing, (r + 0.5) * params.spacing, 0.6);
    for (std::size_t i = 0; i < under; ++i) {
      Vec3 d;
      do d = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
      while (d.squaredNorm() > 1.0);
      scene.cloud.points.push_back(centers[i % centers.size()] + Vec3(0.8 * d.x(), 0.8 * d.y(), 0.6 * d.z()));
      scene.labels.push_back({-1, 0});
    }
  }
  return scene;
}

TreeRecord truth_record(const SyntheticTree& tree, int tree_id, std::optional<double> wood_density) {
  TreeRecord rec;
  rec.tree_id = tree_id;
  rec.dbh_m = tree.dbh_m();
  rec.height_m = tree.height_m();
  rec.volume_m3 = tree.volume_m3;
  if (wood_density) rec.agb_kg = tree.volume_m3 * *wood_density;
  rec.skeleton = tree.skeleton;
  for (auto& n : rec.skeleton.nodes) {
    n.freq = 0;
    n.cluster_size = 0;
  }
  return rec;
}

}  // namespace treegraph
