#pragma once

#include "treegraph/graph.hpp"
#include "treegraph/model.hpp"
#include "treegraph/skeleton.hpp"

#include <vector>

// Single-threaded versions of the OpenMP kernels. Same results, used by the
// equivalence tests and the benchmarks.
namespace treegraph::reference {

std::vector<std::vector<Neighbor>> knn_neighbors(const PointCloud& cloud, int k);

std::vector<double> dispersion_thresholds(const HybridGraph& graph);

/// Representative and L1 median of every cluster, in place.
void cluster_centers(const PointCloud& cloud, const NodeMetrics& metrics, ClusterSet& clusters);

TriangleMesh tree_mesh(const SkeletonGraph& skeleton, int radial_segments, int samples_per_edge = 5);

}  // namespace treegraph::reference
