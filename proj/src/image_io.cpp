#include "wastegrasp/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "wastegrasp/error.hpp"

namespace wastegrasp {

namespace {

using FilePtr = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr file(std::fopen(path.c_str(), mode), &std::fclose);
  if (!file) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  return file;
}

enum class PixelLayout { Gray8, Gray16, Rgb8 };

struct DecodedImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bytes;  // tightly packed rows
};

// Decodes any PNG into the requested layout. 16-bit samples come out in
// host (little-endian) byte order.
DecodedImage decode_png(const std::filesystem::path& path, PixelLayout layout) {
  FilePtr file = open_file(path, "rb");
  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw Error(ErrorCode::IoError, path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "libpng initialisation failed");
  }

  DecodedImage image;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "corrupt PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  image.width = static_cast<int>(png_get_image_width(png, info));
  image.height = static_cast<int>(png_get_image_height(png, info));

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);

  const bool is_gray = (color_type & PNG_COLOR_MASK_COLOR) == 0;
  switch (layout) {
    case PixelLayout::Gray8:
      if (bit_depth == 16) png_set_strip_16(png);
      if (!is_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
      break;
    case PixelLayout::Gray16:
      if (!is_gray || bit_depth != 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::IoError, path.string() + " is not a 16-bit grayscale PNG");
      }
      png_set_swap(png);
      break;
    case PixelLayout::Rgb8:
      if (bit_depth == 16) png_set_strip_16(png);
      if (is_gray) png_set_gray_to_rgb(png);
      break;
  }
  png_read_update_info(png, info);

  const std::size_t row_bytes = png_get_rowbytes(png, info);
  image.bytes.resize(row_bytes * image.height);
  rows.resize(image.height);
  for (int y = 0; y < image.height; ++y) rows[y] = image.bytes.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

void encode_png(const std::filesystem::path& path, int width, int height, int bit_depth,
                int color_type, const std::uint8_t* data, std::size_t row_bytes, bool swap16) {
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "libpng initialisation failed");
  }
  std::vector<png_bytep> rows(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (swap16) png_set_swap(png);
  for (int y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(data + y * row_bytes);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

DepthFrame read_depth_png(const std::filesystem::path& path, double depth_scale) {
  DecodedImage image = decode_png(path, PixelLayout::Gray16);
  DepthFrame frame;
  frame.width = image.width;
  frame.height = image.height;
  frame.depth_scale = depth_scale;
  frame.data.resize(static_cast<std::size_t>(image.width) * image.height);
  std::memcpy(frame.data.data(), image.bytes.data(), frame.data.size() * sizeof(std::uint16_t));
  return frame;
}

void write_depth_png(const std::filesystem::path& path, const DepthFrame& frame) {
  frame.validate();
  encode_png(path, frame.width, frame.height, 16, PNG_COLOR_TYPE_GRAY,
             reinterpret_cast<const std::uint8_t*>(frame.data.data()),
             static_cast<std::size_t>(frame.width) * 2, true);
}

ColorFrame read_color_png(const std::filesystem::path& path) {
  DecodedImage image = decode_png(path, PixelLayout::Rgb8);
  return ColorFrame{image.width, image.height, std::move(image.bytes)};
}

void write_color_png(const std::filesystem::path& path, const ColorFrame& frame) {
  frame.validate();
  encode_png(path, frame.width, frame.height, 8, PNG_COLOR_TYPE_RGB, frame.data.data(),
             static_cast<std::size_t>(frame.width) * 3, false);
}

InstanceMask read_mask_png(const std::filesystem::path& path) {
  DecodedImage image = decode_png(path, PixelLayout::Gray8);
  InstanceMask mask(image.width, image.height);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) mask.bits[i] = image.bytes[i] != 0 ? 1 : 0;
  return mask;
}

void write_mask_png(const std::filesystem::path& path, const InstanceMask& mask) {
  std::vector<std::uint8_t> gray(mask.bits.size());
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = mask.bits[i] ? 255 : 0;
  encode_png(path, mask.width, mask.height, 8, PNG_COLOR_TYPE_GRAY, gray.data(),
             static_cast<std::size_t>(mask.width), false);
}

std::pair<int, int> png_dimensions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  unsigned char header[24];
  if (!in.read(reinterpret_cast<char*>(header), sizeof(header)) ||
      png_sig_cmp(header, 0, 8) != 0) {
    throw Error(ErrorCode::IoError, path.string() + " is not a PNG file");
  }
  auto be32 = [&](int offset) {
    return static_cast<int>((std::uint32_t(header[offset]) << 24) |
                            (std::uint32_t(header[offset + 1]) << 16) |
                            (std::uint32_t(header[offset + 2]) << 8) | header[offset + 3]);
  };
  return {be32(16), be32(20)};
}

CameraSidecar read_intrinsics_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  CameraSidecar sidecar;
  auto field = [&](const char* name) -> const nlohmann::json& {
    if (!doc.contains(name) || !doc[name].is_number()) {
      throw Error(ErrorCode::SchemaError, path.string() + ": field '" + name + "' missing or not a number");
    }
    return doc[name];
  };
  sidecar.intrinsics.fx = field("fx").get<double>();
  sidecar.intrinsics.fy = field("fy").get<double>();
  sidecar.intrinsics.cx = field("cx").get<double>();
  sidecar.intrinsics.cy = field("cy").get<double>();
  sidecar.intrinsics.width = field("width").get<int>();
  sidecar.intrinsics.height = field("height").get<int>();
  if (doc.contains("depth_scale")) sidecar.depth_scale = field("depth_scale").get<double>();
  sidecar.intrinsics.validate();
  if (!(sidecar.depth_scale > 0.0)) {
    throw Error(ErrorCode::SchemaError, path.string() + ": depth_scale must be positive");
  }
  return sidecar;
}

void write_intrinsics_json(const std::filesystem::path& path, const CameraSidecar& sidecar) {
  const PinholeIntrinsics& k = sidecar.intrinsics;
  nlohmann::json doc = {{"fx", k.fx},       {"fy", k.fy},         {"cx", k.cx},
                        {"cy", k.cy},       {"width", k.width},   {"height", k.height},
                        {"depth_scale", sidecar.depth_scale}};
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace wastegrasp
