// Serial reference kernels against their OpenMP versions on one synthetic tree.
// Thread count follows OMP_NUM_THREADS.

#include "treegraph/pipeline.hpp"
#include "treegraph/reference.hpp"
#include "treegraph/synth.hpp"

#include <benchmark/benchmark.h>

using namespace treegraph;

namespace {

struct Data {
  SyntheticTree tree;
  HybridGraph graph;
  SkeletonResult skel;
  Data() {
    tree = generate_tree(TreeParams{}, 3);
    sample_surface(tree, SamplingParams{.density = 3000.0}, 3);
    graph = build_hybrid_graph(tree.cloud, 10);
    skel = skeletonize(tree.cloud, graph, lowest_point(tree.cloud), RunConfig{});
  }
};

const Data& data() {
  static const Data d;
  return d;
}

void BM_knn_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(reference::knn_neighbors(data().tree.cloud, 10));
}
void BM_knn_parallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(knn_neighbors(data().tree.cloud, 10));
}

void BM_dispersion_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(reference::dispersion_thresholds(data().graph));
}
void BM_dispersion_parallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(dispersion_thresholds(data().graph));
}

template <bool Parallel>
void BM_cluster_centers(benchmark::State& st) {
  const auto& d = data();
  for (auto _ : st) {
    ClusterSet c = d.skel.clusters;
    if constexpr (Parallel) cluster_centers(d.tree.cloud, d.skel.metrics, c);
    else reference::cluster_centers(d.tree.cloud, d.skel.metrics, c);
    benchmark::DoNotOptimize(c);
  }
}

void BM_mesh_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(reference::tree_mesh(data().tree.skeleton, 32));
}
void BM_mesh_parallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(tree_mesh(data().tree.skeleton, 32));
}

}  // namespace

BENCHMARK(BM_knn_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_knn_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dispersion_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dispersion_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cluster_centers<false>)->Name("BM_cluster_centers_serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cluster_centers<true>)->Name("BM_cluster_centers_parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mesh_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mesh_parallel)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  (void)data();  // build the fixture outside the timed loops
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
