#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace treegraph {

using Vec3 = Eigen::Vector3d;
using NodeId = std::uint32_t;

inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

/// Indexed 3D points in meters. Index order is file order.
struct PointCloud {
  std::vector<Vec3> points;
  /// Optional per-point scalar (intensity). Empty when absent.
  std::vector<float> intensity;

  [[nodiscard]] std::size_t size() const { return points.size(); }
  [[nodiscard]] bool empty() const { return points.empty(); }
  [[nodiscard]] bool has_intensity() const { return !intensity.empty(); }

  /// Copy of the points selected by `indices`, in the given order.
  [[nodiscard]] PointCloud subset(const std::vector<NodeId>& indices) const;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class GraphError : public Error {
 public:
  using Error::Error;
};

class SkeletonError : public Error {
 public:
  using Error::Error;
};

/// No usable trunk slab around breast height (occluded or cropped stem).
class MissingTrunk : public Error {
 public:
  using Error::Error;
};

class ImplausibleFit : public Error {
 public:
  using Error::Error;
};

}  // namespace treegraph
