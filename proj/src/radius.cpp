#include "treegraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace treegraph {

std::vector<double> subtree_lengths(const SkeletonGraph& skeleton) {
  std::vector<double> l(skeleton.size(), 0.0);
  const auto order = skeleton.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto v = *it;
    l[v] += skeleton.edge_length(v);
    const auto p = skeleton.nodes[v].parent;
    if (p != kNoNode) l[p] += l[v];
  }
  return l;
}

std::uint32_t breast_height_node(const SkeletonGraph& skeleton, std::span<const double> lengths,
                                 double breast_height) {
  const auto kids = skeleton.children();
  const double base = skeleton.nodes[skeleton.root].pos.z();
  std::uint32_t best = skeleton.root;
  double best_gap = std::abs(breast_height);
  for (std::uint32_t v = skeleton.root;;) {
    const double gap = std::abs(skeleton.nodes[v].pos.z() - base - breast_height);
    if (gap < best_gap) {
      best_gap = gap;
      best = v;
    }
    if (kids[v].empty()) break;
    std::uint32_t next = kids[v].front();
    for (const auto c : kids[v])
      if (lengths[c] > lengths[next]) next = c;
    v = next;
  }
  return best;
}

void assign_radii(SkeletonGraph& skeleton, double dbh_m, const RadiusParams& params) {
  skeleton.validate();
  const auto l = subtree_lengths(skeleton);
  const auto kids = skeleton.children();
  const double base_radius = std::max(params.min_radius, dbh_m / 2.0);

  // the stem from the root up to the anchor keeps the breast-height radius
  std::vector<char> fixed(skeleton.size(), 0);
  for (auto v = breast_height_node(skeleton, l, params.breast_height); v != kNoNode;
       v = skeleton.nodes[v].parent) {
    fixed[v] = 1;
    skeleton.nodes[v].radius = base_radius;
  }
  for (const auto v : skeleton.topological_order()) {
    if (fixed[v]) continue;
    const auto p = skeleton.nodes[v].parent;
    const double rp = skeleton.nodes[p].radius;
    const double gamma = kids[p].size() == 1 ? params.gamma_single : params.gamma_multi;
    const double ratio = l[p] > 0.0 ? std::clamp(l[v] / l[p], 0.0, 1.0) : 1.0;
    skeleton.nodes[v].radius = std::max(params.min_radius, rp * std::pow(ratio, gamma));
  }
}

double model_volume(const SkeletonGraph& skeleton) {
  double vol = 0.0;
  for (std::uint32_t v = 0; v < skeleton.size(); ++v) {
    const auto p = skeleton.nodes[v].parent;
    if (p == kNoNode) continue;
    const double h = skeleton.edge_length(v);
    const double R = skeleton.nodes[p].radius, r = skeleton.nodes[v].radius;
    vol += std::numbers::pi * h / 3.0 * (R * R + R * r + r * r);
  }
  return vol;
}

std::optional<double> agb(double volume_m3, std::optional<double> wood_density_kg_m3) {
  if (!wood_density_kg_m3) return std::nullopt;
  if (!(*wood_density_kg_m3 > 0.0)) throw ConfigError("wood density must be positive");
  return volume_m3 * *wood_density_kg_m3;
}

}  // namespace treegraph
