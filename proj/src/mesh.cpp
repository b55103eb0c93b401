#include "treegraph/model.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace treegraph {

void TriangleMesh::append(const TriangleMesh& other) {
  const auto base = static_cast<std::uint32_t>(vertices.size());
  vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
  for (const auto& t : other.triangles) triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
}

std::vector<Vec3> smooth_branch(std::span<const Vec3> polyline, int samples_per_edge) {
  const std::size_t n = polyline.size();
  std::vector<Vec3> out;
  if (n == 0) return out;
  out.reserve((n - 1) * static_cast<std::size_t>(samples_per_edge + 1) + 1);
  out.push_back(polyline[0]);
  if (n == 1) return out;

  auto at = [&](std::ptrdiff_t i) {
    return polyline[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, n - 1))];
  };
  auto tangent = [&](std::ptrdiff_t i) -> Vec3 { return 0.5 * (at(i + 1) - at(i - 1)); };

  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Vec3& p0 = polyline[i];
    const Vec3& p1 = polyline[i + 1];
    const Vec3 m0 = tangent(static_cast<std::ptrdiff_t>(i));
    const Vec3 m1 = tangent(static_cast<std::ptrdiff_t>(i + 1));
    for (int s = 1; s <= samples_per_edge; ++s) {
      const double t = static_cast<double>(s) / (samples_per_edge + 1);
      const double t2 = t * t, t3 = t2 * t;
      const double h00 = 2 * t3 - 3 * t2 + 1;
      const double h10 = t3 - 2 * t2 + t;
      const double h01 = -2 * t3 + 3 * t2;
      const double h11 = t3 - t2;
      out.push_back(h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1);
    }
    out.push_back(p1);
  }
  return out;
}

namespace {

Vec3 any_perpendicular(const Vec3& t) {
  Vec3 axis = Vec3::UnitX();
  if (std::abs(t.y()) < std::abs(t[0]) && std::abs(t.y()) <= std::abs(t.z())) axis = Vec3::UnitY();
  else if (std::abs(t.z()) < std::abs(t[0])) axis = Vec3::UnitZ();
  return (axis - axis.dot(t) * t).normalized();
}

}  // namespace

TriangleMesh generalized_cylinder_mesh(std::span<const Vec3> samples, std::span<const double> radii,
                                       int radial_segments) {
  TriangleMesh mesh;
  const std::size_t n = samples.size();
  if (n < 2 || radial_segments < 3) return mesh;
  const auto segs = static_cast<std::uint32_t>(radial_segments);

  std::vector<Vec3> tangent(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = samples[std::min(i + 1, n - 1)] - samples[i == 0 ? 0 : i - 1];
    tangent[i] = d.normalized();
  }

  // rotation-minimizing frames by double reflection
  std::vector<Vec3> normal(n);
  normal[0] = any_perpendicular(tangent[0]);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Vec3 v1 = samples[i + 1] - samples[i];
    const double c1 = v1.squaredNorm();
    Vec3 r = normal[i], t = tangent[i];
    if (c1 > 0.0) {
      r -= (2.0 / c1) * v1.dot(r) * v1;
      t -= (2.0 / c1) * v1.dot(t) * v1;
    }
    const Vec3 v2 = tangent[i + 1] - t;
    const double c2 = v2.squaredNorm();
    if (c2 > 0.0) r -= (2.0 / c2) * v2.dot(r) * v2;
    r -= r.dot(tangent[i + 1]) * tangent[i + 1];
    normal[i + 1] = r.norm() > 1e-12 ? r.normalized() : any_perpendicular(tangent[i + 1]);
  }

  mesh.vertices.reserve(n * segs + 2);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 b = tangent[i].cross(normal[i]);
    for (std::uint32_t j = 0; j < segs; ++j) {
      const double th = 2.0 * std::numbers::pi * j / segs;
      mesh.vertices.push_back(samples[i] + radii[i] * (std::cos(th) * normal[i] + std::sin(th) * b));
    }
  }
  const auto start_apex = static_cast<std::uint32_t>(mesh.vertices.size());
  mesh.vertices.push_back(samples.front());
  const auto end_apex = static_cast<std::uint32_t>(mesh.vertices.size());
  mesh.vertices.push_back(samples.back());

  mesh.triangles.reserve(2 * (n - 1) * segs + 2 * segs);
  for (std::uint32_t i = 0; i + 1 < n; ++i) {
    const std::uint32_t a = i * segs, b = (i + 1) * segs;
    for (std::uint32_t j = 0; j < segs; ++j) {
      const std::uint32_t jn = (j + 1) % segs;
      mesh.triangles.push_back({a + j, a + jn, b + jn});
      mesh.triangles.push_back({a + j, b + jn, b + j});
    }
  }
  const auto last = static_cast<std::uint32_t>((n - 1) * segs);
  for (std::uint32_t j = 0; j < segs; ++j) {
    const std::uint32_t jn = (j + 1) % segs;
    mesh.triangles.push_back({start_apex, jn, j});
    mesh.triangles.push_back({end_apex, last + j, last + jn});
  }
  return mesh;
}

std::vector<std::vector<std::uint32_t>> branch_chains(const SkeletonGraph& skeleton) {
  std::vector<std::vector<std::uint32_t>> chains;
  if (skeleton.nodes.empty()) return chains;
  const auto kids = skeleton.children();
  const auto l = subtree_lengths(skeleton);

  auto follow = [&](std::vector<std::uint32_t> chain) {
    for (auto v = chain.back(); !kids[v].empty();) {
      std::uint32_t next = kids[v].front();
      for (const auto c : kids[v])
        if (l[c] > l[next]) next = c;
      chain.push_back(next);
      v = next;
    }
    return chain;
  };

  chains.push_back(follow({skeleton.root}));
  for (std::size_t ci = 0; ci < chains.size(); ++ci) {
    const auto chain = chains[ci];  // copy: chains grows below
    // a side chain starts at its parent, whose children are already queued
    for (std::size_t k = ci == 0 ? 0 : 1; k + 1 < chain.size(); ++k)
      for (const auto c : kids[chain[k]])
        if (c != chain[k + 1]) chains.push_back(follow({chain[k], c}));
  }
  if (chains.front().size() < 2) chains.erase(chains.begin());
  return chains;
}

TriangleMesh tree_mesh(const SkeletonGraph& skeleton, int radial_segments, int samples_per_edge) {
  const auto chains = branch_chains(skeleton);
  std::vector<TriangleMesh> parts(chains.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t ci = 0; ci < static_cast<std::int64_t>(chains.size()); ++ci) {
    std::vector<Vec3> pos;
    std::vector<double> rad;
    for (const auto v : chains[ci]) {
      if (!pos.empty() && (skeleton.nodes[v].pos - pos.back()).norm() < 1e-9) continue;
      pos.push_back(skeleton.nodes[v].pos);
      rad.push_back(skeleton.nodes[v].radius);
    }
    if (pos.size() < 2) continue;
    const auto samples = smooth_branch(pos, samples_per_edge);
    std::vector<double> radii;
    radii.reserve(samples.size());
    const auto per_edge = static_cast<std::size_t>(samples_per_edge + 1);
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const std::size_t e = std::min(s / per_edge, rad.size() - 2);
      const double t = static_cast<double>(s - e * per_edge) / static_cast<double>(per_edge);
      radii.push_back((1.0 - t) * rad[e] + t * rad[e + 1]);
    }
    parts[ci] = generalized_cylinder_mesh(samples, radii, radial_segments);
  }
  TriangleMesh mesh;
  for (const auto& p : parts) mesh.append(p);
  return mesh;
}

double mesh_volume(const TriangleMesh& mesh) {
  if (mesh.vertices.empty()) return 0.0;
  const Vec3 o = mesh.vertices.front();  // local origin keeps the sum well conditioned
  double six_v = 0.0;
  for (const auto& t : mesh.triangles)
    six_v += (mesh.vertices[t[0]] - o).dot((mesh.vertices[t[1]] - o).cross(mesh.vertices[t[2]] - o));
  return six_v / 6.0;
}

}  // namespace treegraph
