#include "wastegrasp/camera_geometry.hpp"

#include <string>

#include "wastegrasp/error.hpp"

namespace wastegrasp {

void PinholeIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::InvalidArgument, "principal point outside the image");
  }
}

void DepthFrame::validate() const {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "depth frame has no pixels");
  }
  if (data.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::DimensionMismatch, "depth buffer length does not match width*height");
  }
  if (!(depth_scale > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "depth_scale must be positive");
  }
}

void ColorFrame::validate() const {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "color frame has no pixels");
  }
  if (data.size() != 3 * static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::DimensionMismatch, "color buffer length does not match 3*width*height");
  }
}

Eigen::Vector3d backproject_pixel(double u, double v, double z, const PinholeIntrinsics& k) {
  if (!(z > 0.0)) {
    throw Error(ErrorCode::InvalidDepth, "depth must be positive, got " + std::to_string(z));
  }
  if (!(u >= 0.0 && u < k.width && v >= 0.0 && v < k.height)) {
    throw Error(ErrorCode::OutOfBounds, "pixel (" + std::to_string(u) + ", " + std::to_string(v) +
                                            ") outside the image");
  }
  return {(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z};
}

Eigen::Vector2d project_point(const Eigen::Vector3d& p, const PinholeIntrinsics& k) {
  if (!(p.z() > 0.0)) {
    throw Error(ErrorCode::InvalidDepth, "point is not in front of the camera");
  }
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

namespace {

void check_dimensions(const DepthFrame& depth, const InstanceMask& mask) {
  depth.validate();
  if (mask.width != depth.width || mask.height != depth.height ||
      mask.bits.size() != depth.data.size()) {
    throw Error(ErrorCode::DimensionMismatch, "mask and depth frame dimensions differ");
  }
}

bool in_range(double z, const DepthRange& range) {
  return z > 0.0 && z >= range.z_min && z <= range.z_max;
}

}  // namespace

PointCloud masked_backprojection(const DepthFrame& depth, const ColorFrame& color,
                                 const InstanceMask& mask, const PinholeIntrinsics& k,
                                 const DepthRange& range) {
  k.validate();
  check_dimensions(depth, mask);
  color.validate();
  if (color.width != depth.width || color.height != depth.height) {
    throw Error(ErrorCode::DimensionMismatch, "color and depth frame dimensions differ");
  }
  if (k.width != depth.width || k.height != depth.height) {
    throw Error(ErrorCode::DimensionMismatch, "intrinsics do not match the frame size");
  }
  if (!(range.z_min < range.z_max)) {
    throw Error(ErrorCode::InvalidArgument, "depth range must satisfy z_min < z_max");
  }

  PointCloud cloud;
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      if (!mask.at(u, v)) continue;
      const std::uint16_t sample = depth.at(u, v);
      if (sample == 0) continue;
      const double z = sample * depth.depth_scale;
      if (!in_range(z, range)) continue;
      cloud.points.push_back({(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z});
      cloud.colors.push_back(color.at(u, v));
    }
  }
  if (cloud.empty()) {
    throw Error(ErrorCode::EmptyCloud, "no masked pixel carries a valid in-range depth");
  }
  return cloud;
}

double depth_validity_ratio(const DepthFrame& depth, const InstanceMask& mask,
                            const DepthRange& range) {
  check_dimensions(depth, mask);
  std::size_t total = 0;
  std::size_t valid = 0;
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (!mask.bits[i]) continue;
    ++total;
    if (depth.data[i] != 0 && in_range(depth.data[i] * depth.depth_scale, range)) ++valid;
  }
  if (total == 0) {
    throw Error(ErrorCode::EmptyMask, "mask has no set pixels");
  }
  return static_cast<double>(valid) / static_cast<double>(total);
}

}  // namespace wastegrasp
