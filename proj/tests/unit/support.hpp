#pragma once

#include "treegraph/graph.hpp"
#include "treegraph/types.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace support {

using treegraph::Edge;
using treegraph::NodeId;
using treegraph::Vec3;

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("treegraph_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  [[nodiscard]] std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

inline treegraph::PointCloud random_cloud(std::size_t n, std::uint64_t seed, double extent = 10.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, extent);
  treegraph::PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(u(rng), u(rng), u(rng));
  return c;
}

// Random spanning tree plus `extra` chords, integer-ish weights so that
// equal-distance ties actually occur.
inline treegraph::HybridGraph random_connected_graph(std::size_t n, std::size_t extra,
                                                     std::uint64_t seed, bool integer_weights) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  std::uniform_int_distribution<int> ui(1, 4);
  auto weight = [&] { return integer_weights ? double(ui(rng)) : u(rng); };
  std::vector<Edge> edges;
  std::vector<std::pair<NodeId, NodeId>> seen;
  auto add = [&](NodeId a, NodeId b) {
    if (a == b) return;
    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) return;
    seen.push_back(key);
    edges.push_back({key.first, key.second, weight()});
  };
  for (NodeId v = 1; v < n; ++v) add(std::uniform_int_distribution<NodeId>(0, v - 1)(rng), v);
  std::uniform_int_distribution<NodeId> any(0, static_cast<NodeId>(n - 1));
  for (std::size_t i = 0; i < extra; ++i) add(any(rng), any(rng));
  return treegraph::HybridGraph(n, std::move(edges));
}

}  // namespace support
