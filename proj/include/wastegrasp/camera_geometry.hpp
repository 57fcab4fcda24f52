#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "wastegrasp/point_cloud.hpp"

namespace wastegrasp {

/// Pinhole camera model. There is no distortion term; RGB and depth are
/// assumed registered into the same image.
struct PinholeIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 640;
  int height = 480;

  /// Throws InvalidArgument unless fx, fy > 0, width, height > 0 and the
  /// principal point lies inside the image.
  void validate() const;
};

/// 16-bit depth image; a sample of 0 means "no measurement".
struct DepthFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;  // row-major
  double depth_scale = 0.001;       // meters per unit

  std::uint16_t at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
  void validate() const;
};

struct ColorFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // row-major RGB triples

  Rgb at(int u, int v) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(v) * width + u);
    return {data[i], data[i + 1], data[i + 2]};
  }
  void validate() const;
};

/// Binary per-pixel membership of one object instance.
struct InstanceMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // row-major, 0 or 1

  InstanceMask() = default;
  InstanceMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  bool at(int u, int v) const { return bits[static_cast<std::size_t>(v) * width + u] != 0; }
  void set(int u, int v, bool on = true) {
    bits[static_cast<std::size_t>(v) * width + u] = on ? 1 : 0;
  }
  bool operator==(const InstanceMask&) const = default;
};

struct DepthRange {
  double z_min = 0.15;
  double z_max = 3.0;
};

/// Maps pixel (u, v) with metric depth z to the camera frame
/// (x right, y down, z forward).
Eigen::Vector3d backproject_pixel(double u, double v, double z, const PinholeIntrinsics& k);

/// Continuous pixel coordinates of a camera-frame point; not clamped to the image.
Eigen::Vector2d project_point(const Eigen::Vector3d& p, const PinholeIntrinsics& k);

/// One colored point per mask pixel whose scaled depth is nonzero and lies
/// in [z_min, z_max], in row-major pixel order. The returned cloud's
/// viewpoint is the camera origin.
PointCloud masked_backprojection(const DepthFrame& depth, const ColorFrame& color,
                                 const InstanceMask& mask, const PinholeIntrinsics& k,
                                 const DepthRange& range = {});

/// Fraction of mask pixels carrying a valid in-range depth sample.
double depth_validity_ratio(const DepthFrame& depth, const InstanceMask& mask,
                            const DepthRange& range = {});

}  // namespace wastegrasp
