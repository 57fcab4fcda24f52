#pragma once

// Synthetic scenes shared by the unit and acceptance suites.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "wastegrasp/camera_geometry.hpp"
#include "wastegrasp/dataset_io.hpp"
#include "wastegrasp/pipeline.hpp"
#include "wastegrasp/point_cloud.hpp"

namespace wastegrasp::testing {

using Rng = std::mt19937_64;

inline PinholeIntrinsics default_intrinsics() {
  PinholeIntrinsics k;
  k.fx = 615.0;
  k.fy = 615.0;
  k.cx = 319.5;
  k.cy = 239.5;
  k.width = 640;
  k.height = 480;
  return k;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Eigen::Matrix3d random_rotation(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

/// Any unit vector orthogonal to `axis`.
inline Eigen::Vector3d orthogonal_to(const Eigen::Vector3d& axis) {
  Eigen::Index least = 0;
  axis.cwiseAbs().minCoeff(&least);
  return axis.cross(Eigen::Vector3d::Unit(least)).normalized();
}

struct CylinderSpec {
  Eigen::Vector3d center{0.0, 0.0, 0.5};
  Eigen::Vector3d axis = Eigen::Vector3d::UnitY();
  double radius = 0.03;
  double height = 0.12;
};

/// Points on the lateral surface facing `viewpoint`, with Gaussian
/// position noise of `noise` meters. Viewpoint is stored on the cloud.
inline PointCloud sample_cylinder_view(const CylinderSpec& cyl, std::size_t count, double noise, Rng& rng,
                                       const Eigen::Vector3d& viewpoint = Eigen::Vector3d::Zero()) {
  const Eigen::Vector3d axis = cyl.axis.normalized();
  const Eigen::Vector3d e1 = orthogonal_to(axis);
  const Eigen::Vector3d e2 = axis.cross(e1);
  std::normal_distribution<double> gauss(0.0, noise);
  PointCloud cloud;
  cloud.viewpoint = viewpoint;
  while (cloud.size() < count) {
    const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double t = uniform(rng, -0.5 * cyl.height, 0.5 * cyl.height);
    const Eigen::Vector3d normal = std::cos(theta) * e1 + std::sin(theta) * e2;
    const Eigen::Vector3d p = cyl.center + t * axis + cyl.radius * normal;
    if (normal.dot(viewpoint - p) <= 0.0) continue;
    Eigen::Vector3d jitter(gauss(rng), gauss(rng), gauss(rng));
    if (noise == 0.0) jitter.setZero();
    cloud.points.push_back(p + jitter);
  }
  return cloud;
}

/// Two parallel 40 cm x 4 cm faces `width` apart, i.e. the opposing sides
/// of a box too wide for the default gripper. Both faces share one regular
/// grid, as a depth sensor would sample them, so the slice is mirror
/// symmetric and the median split falls between the faces.
inline PointCloud sample_wide_box_faces(double step = 0.005, double width = 0.20) {
  PointCloud cloud;
  const int ny = static_cast<int>(std::lround(0.40 / step));
  const int nz = static_cast<int>(std::lround(0.04 / step));
  for (int side = -1; side <= 1; side += 2) {
    for (int i = 0; i <= ny; ++i) {
      for (int j = 0; j <= nz; ++j) cloud.points.push_back({side * 0.5 * width, -0.20 + i * step, 0.58 + j * step});
    }
  }
  return cloud;
}

inline std::optional<double> ray_cylinder_depth(const Eigen::Vector3d& ray, const CylinderSpec& cyl) {
  const Eigen::Vector3d axis = cyl.axis.normalized();
  const Eigen::Vector3d oc = -cyl.center;  // ray origin is the camera center
  const Eigen::Vector3d d_perp = ray - ray.dot(axis) * axis;
  const Eigen::Vector3d o_perp = oc - oc.dot(axis) * axis;
  const double a = d_perp.squaredNorm();
  const double b = 2.0 * d_perp.dot(o_perp);
  const double c = o_perp.squaredNorm() - cyl.radius * cyl.radius;
  const double disc = b * b - 4.0 * a * c;
  if (a == 0.0 || disc < 0.0) return std::nullopt;
  const double t = (-b - std::sqrt(disc)) / (2.0 * a);
  if (t <= 0.0) return std::nullopt;
  const Eigen::Vector3d hit = t * ray;
  if (std::abs((hit - cyl.center).dot(axis)) > 0.5 * cyl.height) return std::nullopt;
  return hit.z();
}

inline FrameInputs blank_frame(const PinholeIntrinsics& k) {
  FrameInputs frame;
  frame.intrinsics = k;
  frame.depth.width = k.width;
  frame.depth.height = k.height;
  frame.depth.data.assign(static_cast<std::size_t>(k.width) * k.height, 0);
  frame.color.width = k.width;
  frame.color.height = k.height;
  frame.color.data.assign(3 * static_cast<std::size_t>(k.width) * k.height, 90);
  return frame;
}

/// Ray-casts the visible lateral surface of `cyl` into the frame (depth
/// quantized to the frame's depth scale) and returns the object mask.
/// Pixels already covered by a nearer surface are left alone.
inline InstanceMask render_cylinder(FrameInputs& frame, const CylinderSpec& cyl, Rgb color = {30, 120, 200}) {
  const PinholeIntrinsics& k = frame.intrinsics;
  InstanceMask mask(k.width, k.height);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const Eigen::Vector3d ray((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      const auto z = ray_cylinder_depth(ray, cyl);
      if (!z) continue;
      const auto sample = static_cast<std::uint16_t>(std::lround(*z / frame.depth.depth_scale));
      std::uint16_t& current = frame.depth.data[static_cast<std::size_t>(v) * k.width + u];
      if (current != 0 && current <= sample) continue;
      current = sample;
      mask.set(u, v);
      const std::size_t ci = 3 * (static_cast<std::size_t>(v) * k.width + u);
      for (int c = 0; c < 3; ++c) frame.color.data[ci + c] = color[c];
    }
  }
  return mask;
}

inline DetectionRecord detection_for(const InstanceMask& mask, ClassLabel label, double score,
                                     const std::string& image_id = "frame") {
  return DetectionRecord{image_id, label, encode_rle(mask), score};
}

/// Random 0/1 mask with independent pixels.
inline InstanceMask random_mask(int width, int height, double density, Rng& rng) {
  std::bernoulli_distribution bit(density);
  InstanceMask mask(width, height);
  for (auto& b : mask.bits) b = bit(rng) ? 1 : 0;
  return mask;
}

/// Axis-aligned rectangle mask, inclusive bounds clipped to the image.
inline InstanceMask rect_mask(int width, int height, int u0, int v0, int u1, int v1) {
  InstanceMask mask(width, height);
  for (int v = std::max(0, v0); v <= std::min(height - 1, v1); ++v) {
    for (int u = std::max(0, u0); u <= std::min(width - 1, u1); ++u) mask.set(u, v);
  }
  return mask;
}

/// Angle in degrees between a line direction and a plane normal's
/// orthogonal complement, i.e. how far `direction` is from perpendicular to `axis`.
inline double degrees_from_perpendicular(const Eigen::Vector3d& direction, const Eigen::Vector3d& axis) {
  const double s = std::abs(direction.normalized().dot(axis.normalized()));
  return std::asin(std::min(1.0, s)) * 180.0 / std::numbers::pi;
}

}  // namespace wastegrasp::testing
