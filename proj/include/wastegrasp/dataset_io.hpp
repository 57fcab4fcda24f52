#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wastegrasp/camera_geometry.hpp"

namespace wastegrasp {

// Class ids are fixed so per-class report columns stay stable.
enum class ClassLabel : int {
  OpaquePlasticBottle = 0,
  PaperboardBox = 1,
  ClearPlasticBottle = 2,
  DrinkCan = 3,
  OpaquePlasticContainer = 4,
};

inline constexpr int kNumClasses = 5;

std::string_view class_name(ClassLabel label);
std::optional<ClassLabel> class_from_name(std::string_view name);
std::optional<ClassLabel> class_from_id(int id);
inline int class_id(ClassLabel label) { return static_cast<int>(label); }

enum class Environment { Indoor, Outdoor };

std::string_view environment_name(Environment env);

/// COCO-compatible run-length encoding: column-major runs alternating
/// background/foreground, starting with a (possibly empty) background run.
struct RleMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> counts;
  bool operator==(const RleMask&) const = default;
};

RleMask encode_rle(const InstanceMask& mask);
/// Throws LengthMismatch when the counts do not sum to width*height.
InstanceMask decode_rle(const RleMask& rle);

std::size_t mask_area(const InstanceMask& mask);

/// Inclusive pixel bounds of the set bits.
struct PixelBox {
  int u_min = 0;
  int v_min = 0;
  int u_max = 0;
  int v_max = 0;
  bool operator==(const PixelBox&) const = default;
};

/// Throws EmptyMask when no bit is set.
PixelBox mask_bbox(const InstanceMask& mask);

/// Either a PNG file (resolved against the document's directory) or an
/// inline RLE payload.
using MaskRef = std::variant<std::filesystem::path, RleMask>;

InstanceMask load_mask(const MaskRef& ref);

struct AnnotationRecord {
  std::string image_id;
  ClassLabel label = ClassLabel::OpaquePlasticBottle;
  MaskRef mask;
};

struct DetectionRecord {
  std::string image_id;
  ClassLabel label = ClassLabel::OpaquePlasticBottle;
  MaskRef mask;
  double score = 0.0;
};

struct ImageEntry {
  std::string id;
  std::filesystem::path color;
  std::filesystem::path depth;
  std::filesystem::path intrinsics;
  Environment environment = Environment::Indoor;
};

struct DatasetManifest {
  std::vector<ImageEntry> images;
  std::vector<AnnotationRecord> annotations;

  const ImageEntry* find_image(std::string_view id) const;
};

/// Parses the manifest JSON. Relative paths are resolved against the
/// manifest's directory. Does not touch referenced files.
///
/// Throws ParseError (with line/column) on malformed JSON and SchemaError
/// naming the offending field, duplicate image ids, or annotations that
/// reference an unknown image.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir);

std::vector<DetectionRecord> load_predictions(const std::filesystem::path& path);
std::vector<DetectionRecord> parse_predictions(std::string_view json_text,
                                               const std::filesystem::path& base_dir);

struct ValidationFinding {
  enum class Severity { Error, Warning };
  Severity severity = Severity::Error;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationFinding> findings;
  std::array<std::size_t, kNumClasses> class_counts{};

  bool valid() const;
  std::size_t error_count() const;
  std::size_t warning_count() const;
};

struct ValidationOptions {
  /// Warn when max/min annotation count over the classes present exceeds this.
  double max_class_ratio = 1.5;
};

/// Checks file existence, image/mask dimensions against the intrinsics,
/// empty masks and class balance. Reads files but never modifies anything.
ValidationReport validate_manifest(const DatasetManifest& manifest,
                                   const ValidationOptions& options = {});

}  // namespace wastegrasp
