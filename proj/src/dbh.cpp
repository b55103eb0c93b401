#include "treegraph/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace treegraph {

std::optional<Circle> fit_circle_algebraic(std::span<const Vec2> points) {
  if (points.size() < 3) return std::nullopt;
  // x^2 + y^2 + D x + E y + F = 0, solved in centered coordinates
  Vec2 mean = Vec2::Zero();
  for (const Vec2& p : points) mean += p;
  mean /= static_cast<double>(points.size());

  Eigen::MatrixXd A(points.size(), 3);
  Eigen::VectorXd b(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec2 q = points[i] - mean;
    A(i, 0) = q.x();
    A(i, 1) = q.y();
    A(i, 2) = 1.0;
    b(i) = -(q.squaredNorm());
  }
  const auto qr = A.colPivHouseholderQr();
  if (qr.rank() < 3) return std::nullopt;  // collinear
  const Eigen::Vector3d s = qr.solve(b);
  if (!s.allFinite()) return std::nullopt;
  const Vec2 c(-s(0) / 2.0, -s(1) / 2.0);
  const double r2 = c.squaredNorm() - s(2);
  if (!(r2 > 0.0)) return std::nullopt;
  return Circle{c + mean, std::sqrt(r2)};
}

namespace {

std::optional<Circle> circumcircle(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double d = 2.0 * (a.x() * (b.y() - c.y()) + b.x() * (c.y() - a.y()) + c.x() * (a.y() - b.y()));
  if (std::abs(d) < 1e-12) return std::nullopt;
  const double a2 = a.squaredNorm(), b2 = b.squaredNorm(), c2 = c.squaredNorm();
  const Vec2 center((a2 * (b.y() - c.y()) + b2 * (c.y() - a.y()) + c2 * (a.y() - b.y())) / d,
                    (a2 * (c.x() - b.x()) + b2 * (a.x() - c.x()) + c2 * (b.x() - a.x())) / d);
  return Circle{center, (a - center).norm()};
}

std::size_t count_inliers(std::span<const Vec2> points, const Circle& c, double tol) {
  std::size_t n = 0;
  for (const Vec2& p : points)
    if (std::abs((p - c.center).norm() - c.radius) <= tol) ++n;
  return n;
}

}  // namespace

std::optional<RansacResult> fit_circle_ransac(std::span<const Vec2> points, int iterations,
                                              double tolerance, std::uint64_t seed) {
  if (points.size() < 3) return std::nullopt;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  std::optional<RansacResult> best;
  for (int it = 0; it < iterations; ++it) {
    const std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
    if (i == j || j == k || i == k) continue;
    const auto c = circumcircle(points[i], points[j], points[k]);
    if (!c) continue;
    const std::size_t n = count_inliers(points, *c, tolerance);
    if (!best || n > best->inliers) best = RansacResult{*c, n};
  }
  if (!best) return std::nullopt;

  std::vector<Vec2> inl;
  for (const Vec2& p : points)
    if (std::abs((p - best->circle.center).norm() - best->circle.radius) <= tolerance)
      inl.push_back(p);
  if (const auto refit = fit_circle_algebraic(inl)) {
    const std::size_t n = count_inliers(points, *refit, tolerance);
    if (n >= best->inliers) best = RansacResult{*refit, n};
  }
  return best;
}

double estimate_dbh(const PointCloud& tree, const DbhOptions& opts) {
  if (tree.empty()) throw MissingTrunk("empty tree cloud");
  double base = opts.ground_z.value_or(std::numeric_limits<double>::infinity());
  if (!opts.ground_z)
    for (const Vec3& p : tree.points) base = std::min(base, p.z());

  std::vector<Vec2> slab;
  for (const Vec3& p : tree.points) {
    const double h = p.z() - base;
    if (h >= opts.slab_low && h <= opts.slab_high) slab.emplace_back(p.x(), p.y());
  }
  if (slab.size() < opts.min_points)
    throw MissingTrunk("only " + std::to_string(slab.size()) +
                       " points in the breast-height slab");
  const auto fit = fit_circle_ransac(slab, opts.iterations, opts.tolerance, opts.seed);
  if (!fit) throw ImplausibleFit("no circle could be fitted to the breast-height slab");
  const double r = fit->circle.radius;
  if (r < opts.min_radius || r > opts.max_radius)
    throw ImplausibleFit("fitted stem radius " + std::to_string(r) + " m is out of range");
  return 2.0 * r;
}

double dbh_from_height(double height_m, double a, double b) {
  return a * std::pow(height_m, b) / 100.0;
}

}  // namespace treegraph
