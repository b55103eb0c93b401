#include "treegraph/kdtree.hpp"
#include "treegraph/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

namespace treegraph {

namespace {

double sum_of_distances(std::span<const Vec3> points, const Vec3& x) {
  double s = 0.0;
  for (const Vec3& p : points) s += (p - x).norm();
  return s;
}

}  // namespace

L1MedianResult l1_median_trace(std::span<const Vec3> points, double tol, int max_iter) {
  L1MedianResult r;
  if (points.empty()) throw Error("l1_median of an empty point set");
  Vec3 x = Vec3::Zero();
  for (const Vec3& p : points) x += p;
  x /= static_cast<double>(points.size());
  r.position = x;
  if (points.size() == 1) {
    r.position = points.front();
    return r;
  }

  constexpr double kCoincident = 1e-12;
  for (int it = 0; it < max_iter; ++it) {
    Vec3 num = Vec3::Zero();
    double den = 0.0;
    int coincident = 0;
    for (const Vec3& p : points) {
      const double d = (p - x).norm();
      if (d < kCoincident) {
        ++coincident;
        continue;
      }
      num += p / d;
      den += 1.0 / d;
    }
    if (den == 0.0) break;
    const Vec3 weiszfeld = num / den;
    Vec3 next = weiszfeld;
    if (coincident > 0) {
      // Vardi-Zhang: stay at the data point unless the pull of the rest wins
      const double pull = (num - x * den).norm();
      const double eta = static_cast<double>(coincident);
      if (pull <= eta) break;
      next = (1.0 - eta / pull) * weiszfeld + std::min(1.0, eta / pull) * x;
    }
    const double step = (next - x).norm();
    x = next;
    r.iterations = it + 1;
    r.objective.push_back(sum_of_distances(points, x));
    if (step < tol) break;
  }
  r.position = x;
  return r;
}

Vec3 l1_median(std::span<const Vec3> points, double tol, int max_iter) {
  return l1_median_trace(points, tol, max_iter).position;
}

NodeId select_representative(std::span<const NodeId> members, std::span<const std::uint32_t> freq) {
  if (members.empty()) throw Error("representative of an empty cluster");
  NodeId best = members.front();
  for (const NodeId m : members)
    if (freq[m] > freq[best] || (freq[m] == freq[best] && m < best)) best = m;
  return best;
}

std::vector<std::uint32_t> mean_shift(std::span<const Vec3> points, double bandwidth,
                                      const MeanShiftParams& params) {
  const std::size_t n = points.size();
  std::vector<std::uint32_t> label(n, 0);
  if (n <= 1 || !(bandwidth > 0.0)) return label;

  // seeds: centroids of occupied bandwidth-sized grid cells
  std::map<std::tuple<long, long, long>, std::pair<Vec3, int>> cells;
  for (const Vec3& p : points) {
    const auto key = std::make_tuple(static_cast<long>(std::floor(p.x() / bandwidth)),
                                     static_cast<long>(std::floor(p.y() / bandwidth)),
                                     static_cast<long>(std::floor(p.z() / bandwidth)));
    auto& [sum, count] = cells[key];
    if (count == 0) sum = Vec3::Zero();
    sum += p;
    ++count;
  }
  const KdTree tree(points);

  struct Mode {
    Vec3 pos;
    std::size_t support;
  };
  std::vector<Mode> modes;
  for (const auto& [key, acc] : cells) {
    Vec3 x = acc.first / acc.second;
    std::size_t support = 0;
    for (int it = 0; it < params.max_iterations; ++it) {
      const auto nb = tree.radius(x, bandwidth);
      if (nb.empty()) break;
      Vec3 mean = Vec3::Zero();
      for (const Neighbor& q : nb) mean += points[q.id];
      mean /= static_cast<double>(nb.size());
      support = nb.size();
      const double shift = (mean - x).norm();
      x = mean;
      if (shift < params.tolerance) break;
    }
    if (support > 0) modes.push_back({x, support});
  }
  if (modes.empty()) return label;

  // strongest modes first; absorb weaker ones within half a bandwidth
  std::stable_sort(modes.begin(), modes.end(),
                   [](const Mode& a, const Mode& b) { return a.support > b.support; });
  std::vector<Vec3> kept;
  for (const Mode& m : modes) {
    const bool near = std::any_of(kept.begin(), kept.end(), [&](const Vec3& k) {
      return (k - m.pos).norm() < 0.5 * bandwidth;
    });
    if (!near) kept.push_back(m.pos);
  }

  std::vector<std::uint32_t> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t best = 0;
    double bd = (points[i] - kept[0]).squaredNorm();
    for (std::uint32_t j = 1; j < kept.size(); ++j) {
      const double d = (points[i] - kept[j]).squaredNorm();
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    raw[i] = best;
  }
  // renumber by first occurrence
  std::vector<std::uint32_t> remap(kept.size(), static_cast<std::uint32_t>(-1));
  std::uint32_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (remap[raw[i]] == static_cast<std::uint32_t>(-1)) remap[raw[i]] = next++;
    label[i] = remap[raw[i]];
  }
  return label;
}

ClusterSet adaptive_cluster(const PointCloud& cloud, const NodeMetrics& metrics,
                            std::span<const double> boundaries, bool leaf_on) {
  const std::size_t n = metrics.tip.size();
  std::vector<int> bin(n);
  for (std::size_t v = 0; v < n; ++v) bin[v] = bin_index(boundaries, metrics.reverse_distance[v]);

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return std::tie(metrics.tip[a], bin[a], a) < std::tie(metrics.tip[b], bin[b], b);
  });
  std::vector<Cluster> initial;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    Cluster c;
    c.tip = metrics.tip[order[i]];
    c.bin = bin[order[i]];
    while (j < n && metrics.tip[order[j]] == c.tip && bin[order[j]] == c.bin)
      c.members.push_back(order[j++]);
    initial.push_back(std::move(c));
    i = j;
  }

  std::vector<std::vector<Cluster>> refined(initial.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t ci = 0; ci < static_cast<std::int64_t>(initial.size()); ++ci) {
    Cluster& c = initial[ci];
    const double width = boundaries.size() >= 2
                             ? boundaries[c.bin + 1] - boundaries[c.bin]
                             : 0.0;
    if (!leaf_on || c.members.size() < 2 || !(width > 0.0)) {
      refined[ci].push_back(std::move(c));
      continue;
    }
    std::vector<Vec3> pts;
    pts.reserve(c.members.size());
    for (const NodeId m : c.members) pts.push_back(cloud.points[m]);
    const auto label = mean_shift(pts, width);
    const auto parts = *std::max_element(label.begin(), label.end()) + 1;
    std::vector<Cluster> split(parts);
    for (std::size_t i = 0; i < c.members.size(); ++i) {
      split[label[i]].tip = c.tip;
      split[label[i]].bin = c.bin;
      split[label[i]].members.push_back(c.members[i]);
    }
    refined[ci] = std::move(split);
  }

  ClusterSet out;
  for (auto& group : refined)
    for (auto& c : group) {
      std::sort(c.members.begin(), c.members.end());
      out.clusters.push_back(std::move(c));
    }
  std::sort(out.clusters.begin(), out.clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.members.front() < b.members.front(); });
  out.cluster_of.assign(n, 0);
  for (std::uint32_t c = 0; c < out.clusters.size(); ++c)
    for (const NodeId m : out.clusters[c].members) out.cluster_of[m] = c;

  cluster_centers(cloud, metrics, out);
  return out;
}

void cluster_centers(const PointCloud& cloud, const NodeMetrics& metrics, ClusterSet& clusters) {
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t ci = 0; ci < static_cast<std::int64_t>(clusters.clusters.size()); ++ci) {
    Cluster& c = clusters.clusters[ci];
    c.representative = select_representative(c.members, metrics.freq);
    std::vector<Vec3> pts;
    pts.reserve(c.members.size());
    for (const NodeId m : c.members) pts.push_back(cloud.points[m]);
    c.median = l1_median(pts);
  }
}

}  // namespace treegraph
