#pragma once

#include <filesystem>

#include "wastegrasp/camera_geometry.hpp"

namespace wastegrasp {

/// 16-bit single-channel PNG. `depth_scale` is not stored in the PNG and
/// must come from the intrinsics sidecar.
DepthFrame read_depth_png(const std::filesystem::path& path, double depth_scale = 0.001);
void write_depth_png(const std::filesystem::path& path, const DepthFrame& frame);

/// 8-bit RGB PNG; grayscale and alpha inputs are converted to RGB.
ColorFrame read_color_png(const std::filesystem::path& path);
void write_color_png(const std::filesystem::path& path, const ColorFrame& frame);

/// Single-channel 8-bit PNG, any nonzero value is foreground.
InstanceMask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const InstanceMask& mask);

/// Reads only the IHDR chunk; returns {width, height}.
std::pair<int, int> png_dimensions(const std::filesystem::path& path);

struct CameraSidecar {
  PinholeIntrinsics intrinsics;
  double depth_scale = 0.001;
};

/// JSON sidecar with fields fx, fy, cx, cy, width, height, depth_scale.
CameraSidecar read_intrinsics_json(const std::filesystem::path& path);
void write_intrinsics_json(const std::filesystem::path& path, const CameraSidecar& sidecar);

}  // namespace wastegrasp
