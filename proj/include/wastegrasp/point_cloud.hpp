#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace wastegrasp {

using Rgb = std::array<std::uint8_t, 3>;

/// Single-view object cloud in the camera frame (meters).
///
/// `colors` and `normals` are either empty or parallel to `points`.
/// `viewpoint` is the sensor origin the cloud was observed from; normal
/// orientation is resolved against it.
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Rgb> colors;
  std::vector<Eigen::Vector3d> normals;
  Eigen::Vector3d viewpoint = Eigen::Vector3d::Zero();

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  bool has_colors() const noexcept { return !colors.empty(); }
  bool has_normals() const noexcept { return !normals.empty(); }

  /// Throws InvalidArgument when the optional attribute arrays are not
  /// parallel to `points`.
  void check_consistent() const;
};

struct AxisAlignedBox {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();
};

AxisAlignedBox bounding_box(const PointCloud& cloud);

}  // namespace wastegrasp
