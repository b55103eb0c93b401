#include "treegraph/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace treegraph::reference {

std::vector<std::vector<Neighbor>> knn_neighbors(const PointCloud& cloud, int k) {
  const std::size_t n = cloud.size();
  std::vector<std::vector<Neighbor>> out(n);
  if (n < 2 || k < 1) return out;
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n - 1);
  const KdTree tree(cloud.points);
  for (NodeId i = 0; i < n; ++i) {
    std::size_t want = kk;
    std::vector<Neighbor> nb;
    for (;;) {
      nb = tree.knn(cloud.points[i], want, i);
      const auto zeros = static_cast<std::size_t>(
          std::count_if(nb.begin(), nb.end(), [](const Neighbor& x) { return x.dist <= 0.0; }));
      if (nb.size() - zeros >= kk || nb.size() < want || want == n - 1) break;
      want = std::min(n - 1, want + zeros);
    }
    std::erase_if(nb, [](const Neighbor& x) { return x.dist <= 0.0; });
    if (nb.size() > kk) nb.resize(kk);
    out[i] = std::move(nb);
  }
  return out;
}

std::vector<double> dispersion_thresholds(const HybridGraph& graph) {
  std::vector<double> cutoff(graph.node_count(), std::numeric_limits<double>::infinity());
  for (NodeId i = 0; i < graph.node_count(); ++i) {
    const auto row = graph.neighbors(i);
    if (row.size() < 2) continue;
    double sum = 0.0;
    for (const Incident& e : row) sum += e.w;
    const double mean = sum / static_cast<double>(row.size());
    double var = 0.0;
    for (const Incident& e : row) var += (e.w - mean) * (e.w - mean);
    cutoff[i] = mean + std::sqrt(var / static_cast<double>(row.size()));
  }
  return cutoff;
}

void cluster_centers(const PointCloud& cloud, const NodeMetrics& metrics, ClusterSet& clusters) {
  std::vector<Vec3> pts;
  for (Cluster& c : clusters.clusters) {
    c.representative = select_representative(c.members, metrics.freq);
    pts.clear();
    for (const NodeId m : c.members) pts.push_back(cloud.points[m]);
    c.median = l1_median(pts);
  }
}

TriangleMesh tree_mesh(const SkeletonGraph& skeleton, int radial_segments, int samples_per_edge) {
  TriangleMesh mesh;
  const auto per_edge = static_cast<std::size_t>(samples_per_edge + 1);
  for (const auto& chain : branch_chains(skeleton)) {
    std::vector<Vec3> pos;
    std::vector<double> rad;
    for (const auto v : chain) {
      if (!pos.empty() && (skeleton.nodes[v].pos - pos.back()).norm() < 1e-9) continue;
      pos.push_back(skeleton.nodes[v].pos);
      rad.push_back(skeleton.nodes[v].radius);
    }
    if (pos.size() < 2) continue;
    const auto samples = smooth_branch(pos, samples_per_edge);
    std::vector<double> radii;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const std::size_t e = std::min(s / per_edge, rad.size() - 2);
      const double t = static_cast<double>(s - e * per_edge) / static_cast<double>(per_edge);
      radii.push_back((1.0 - t) * rad[e] + t * rad[e + 1]);
    }
    mesh.append(generalized_cylinder_mesh(samples, radii, radial_segments));
  }
  return mesh;
}

}  // namespace treegraph::reference
