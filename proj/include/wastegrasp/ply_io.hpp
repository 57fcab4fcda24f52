#pragma once

#include <filesystem>
#include <iosfwd>

#include "wastegrasp/point_cloud.hpp"

namespace wastegrasp {

enum class PlyFormat { Ascii, BinaryLittleEndian };

/// Writes vertices with double x,y,z and, when present, uchar
/// red,green,blue and double nx,ny,nz. Doubles make the round trip exact.
void write_ply(std::ostream& out, const PointCloud& cloud, PlyFormat format);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud, PlyFormat format);

/// Reads the vertex element of an ASCII or binary little-endian PLY.
/// Any scalar property type is accepted for x,y,z / red,green,blue /
/// nx,ny,nz; other properties and elements are skipped.
PointCloud read_ply(std::istream& in);
PointCloud read_ply(const std::filesystem::path& path);

}  // namespace wastegrasp
