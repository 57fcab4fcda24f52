#include "wastegrasp/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "wastegrasp/error.hpp"
#include "wastegrasp/image_io.hpp"

namespace wastegrasp {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "opaque_plastic_bottle", "paperboard_box", "clear_plastic_bottle", "drink_can",
    "opaque_plastic_container"};

}  // namespace

std::string_view class_name(ClassLabel label) { return kClassNames.at(class_id(label)); }

std::optional<ClassLabel> class_from_name(std::string_view name) {
  for (int i = 0; i < kNumClasses; ++i) {
    if (kClassNames[i] == name) return static_cast<ClassLabel>(i);
  }
  return std::nullopt;
}

std::optional<ClassLabel> class_from_id(int id) {
  if (id < 0 || id >= kNumClasses) return std::nullopt;
  return static_cast<ClassLabel>(id);
}

std::string_view environment_name(Environment env) {
  return env == Environment::Indoor ? "indoor" : "outdoor";
}

RleMask encode_rle(const InstanceMask& mask) {
  RleMask rle{mask.width, mask.height, {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (int u = 0; u < mask.width; ++u) {
    for (int v = 0; v < mask.height; ++v) {
      const std::uint8_t bit = mask.at(u, v) ? 1 : 0;
      if (bit != current) {
        rle.counts.push_back(run);
        run = 0;
        current = bit;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

InstanceMask decode_rle(const RleMask& rle) {
  if (rle.width < 0 || rle.height < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative RLE dimensions");
  }
  const std::uint64_t expected = static_cast<std::uint64_t>(rle.width) * rle.height;
  std::uint64_t total = 0;
  for (std::uint32_t c : rle.counts) total += c;
  if (total != expected) {
    throw Error(ErrorCode::LengthMismatch, "RLE counts sum to " + std::to_string(total) +
                                               ", expected " + std::to_string(expected));
  }
  InstanceMask mask(rle.width, rle.height);
  std::uint64_t pos = 0;
  bool foreground = false;
  for (std::uint32_t c : rle.counts) {
    if (foreground) {
      for (std::uint64_t i = pos; i < pos + c; ++i) {
        const int u = static_cast<int>(i / rle.height);
        const int v = static_cast<int>(i % rle.height);
        mask.set(u, v);
      }
    }
    pos += c;
    foreground = !foreground;
  }
  return mask;
}

std::size_t mask_area(const InstanceMask& mask) {
  return static_cast<std::size_t>(std::count(mask.bits.begin(), mask.bits.end(), std::uint8_t{1}));
}

PixelBox mask_bbox(const InstanceMask& mask) {
  PixelBox box{mask.width, mask.height, -1, -1};
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      if (!mask.at(u, v)) continue;
      box.u_min = std::min(box.u_min, u);
      box.v_min = std::min(box.v_min, v);
      box.u_max = std::max(box.u_max, u);
      box.v_max = std::max(box.v_max, v);
    }
  }
  if (box.u_max < 0) throw Error(ErrorCode::EmptyMask, "bounding box of an empty mask");
  return box;
}

InstanceMask load_mask(const MaskRef& ref) {
  if (const auto* path = std::get_if<std::filesystem::path>(&ref)) return read_mask_png(*path);
  return decode_rle(std::get<RleMask>(ref));
}

const ImageEntry* DatasetManifest::find_image(std::string_view id) const {
  for (const auto& image : images) {
    if (image.id == id) return &image;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// JSON decoding

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json parse_document(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line/column for the message.
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " +
                                           std::to_string(column) + ": " + e.what());
  }
}

[[noreturn]] void schema_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::SchemaError, "field '" + field + "': " + what);
}

const json& require(const json& object, const char* key, const std::string& where) {
  if (!object.is_object()) schema_error(where, "expected an object");
  auto it = object.find(key);
  if (it == object.end()) schema_error(where + "." + key, "missing");
  return *it;
}

std::string require_string(const json& object, const char* key, const std::string& where) {
  const json& value = require(object, key, where);
  if (!value.is_string()) schema_error(where + "." + key, "expected a string");
  return value.get<std::string>();
}

// Ids may be written as strings or integers.
std::string require_id(const json& object, const char* key, const std::string& where) {
  const json& value = require(object, key, where);
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  schema_error(where + "." + key, "expected a string or integer id");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

ClassLabel parse_class(const json& object, const std::string& where) {
  const json& value = require(object, "class", where);
  std::optional<ClassLabel> label;
  if (value.is_string()) label = class_from_name(value.get<std::string>());
  if (value.is_number_integer()) label = class_from_id(value.get<int>());
  if (!label) schema_error(where + ".class", "unknown class " + value.dump());
  return *label;
}

RleMask parse_rle(const json& value, const std::string& where) {
  const json& size = require(value, "size", where);
  if (!size.is_array() || size.size() != 2 || !size[0].is_number_integer() ||
      !size[1].is_number_integer()) {
    schema_error(where + ".size", "expected [height, width]");
  }
  const json& counts = require(value, "counts", where);
  if (!counts.is_array()) schema_error(where + ".counts", "expected an array of run lengths");
  RleMask rle;
  rle.height = size[0].get<int>();
  rle.width = size[1].get<int>();
  if (rle.height < 0 || rle.width < 0) schema_error(where + ".size", "negative dimension");
  rle.counts.reserve(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!counts[i].is_number_unsigned() && !(counts[i].is_number_integer() && counts[i].get<long long>() >= 0)) {
      schema_error(where + ".counts[" + std::to_string(i) + "]", "expected a non-negative integer");
    }
    rle.counts.push_back(counts[i].get<std::uint32_t>());
  }
  return rle;
}

MaskRef parse_mask_ref(const json& object, const std::string& where,
                       const std::filesystem::path& base) {
  const bool has_mask = object.contains("mask");
  const bool has_rle = object.contains("rle");
  if (has_mask == has_rle) schema_error(where, "exactly one of 'mask' or 'rle' is required");
  if (has_mask) return resolve(base, require_string(object, "mask", where));
  return parse_rle(object["rle"], where + ".rle");
}

}  // namespace

DatasetManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir) {
  const json doc = parse_document(json_text);
  if (!doc.is_object()) schema_error("<root>", "expected an object");

  DatasetManifest manifest;
  const json& images = require(doc, "images", "<root>");
  if (!images.is_array()) schema_error("images", "expected an array");
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = "images[" + std::to_string(i) + "]";
    const json& item = images[i];
    ImageEntry entry;
    entry.id = require_id(item, "id", where);
    if (!seen.insert(entry.id).second) schema_error(where + ".id", "duplicate image id '" + entry.id + "'");
    entry.color = resolve(base_dir, require_string(item, "color", where));
    entry.depth = resolve(base_dir, require_string(item, "depth", where));
    entry.intrinsics = resolve(base_dir, require_string(item, "intrinsics", where));
    const std::string env = require_string(item, "environment", where);
    if (env == "indoor") {
      entry.environment = Environment::Indoor;
    } else if (env == "outdoor") {
      entry.environment = Environment::Outdoor;
    } else {
      schema_error(where + ".environment", "expected 'indoor' or 'outdoor', got '" + env + "'");
    }
    manifest.images.push_back(std::move(entry));
  }

  const json& annotations = require(doc, "annotations", "<root>");
  if (!annotations.is_array()) schema_error("annotations", "expected an array");
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const std::string where = "annotations[" + std::to_string(i) + "]";
    const json& item = annotations[i];
    AnnotationRecord record;
    record.image_id = require_id(item, "image_id", where);
    if (!seen.count(record.image_id)) {
      schema_error(where + ".image_id", "references unknown image '" + record.image_id + "'");
    }
    record.label = parse_class(item, where);
    record.mask = parse_mask_ref(item, where, base_dir);
    manifest.annotations.push_back(std::move(record));
  }
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text(path), path.parent_path());
}

std::vector<DetectionRecord> parse_predictions(std::string_view json_text,
                                               const std::filesystem::path& base_dir) {
  const json doc = parse_document(json_text);
  if (!doc.is_array()) schema_error("<root>", "expected an array of detections");
  std::vector<DetectionRecord> records;
  records.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "[" + std::to_string(i) + "]";
    const json& item = doc[i];
    DetectionRecord record;
    record.image_id = require_id(item, "image_id", where);
    record.label = parse_class(item, where);
    const json& score = require(item, "score", where);
    if (!score.is_number()) schema_error(where + ".score", "expected a number");
    record.score = score.get<double>();
    if (!(record.score >= 0.0 && record.score <= 1.0)) {
      schema_error(where + ".score", "must lie in [0, 1]");
    }
    record.mask = parse_mask_ref(item, where, base_dir);
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<DetectionRecord> load_predictions(const std::filesystem::path& path) {
  return parse_predictions(read_text(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::valid() const { return error_count() == 0; }

std::size_t ValidationReport::error_count() const {
  return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(), [](const auto& f) {
    return f.severity == ValidationFinding::Severity::Error;
  }));
}

std::size_t ValidationReport::warning_count() const { return findings.size() - error_count(); }

ValidationReport validate_manifest(const DatasetManifest& manifest, const ValidationOptions& options) {
  ValidationReport report;
  auto error = [&](std::string message) {
    report.findings.push_back({ValidationFinding::Severity::Error, std::move(message)});
  };
  auto warning = [&](std::string message) {
    report.findings.push_back({ValidationFinding::Severity::Warning, std::move(message)});
  };
  auto exists = [&](const std::filesystem::path& path, const std::string& what) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
      error("missing " + what + " file: " + path.string());
      return false;
    }
    return true;
  };

  struct Dims {
    int width;
    int height;
  };
  std::vector<std::optional<Dims>> image_dims(manifest.images.size());
  std::set<std::string> ids;
  for (std::size_t i = 0; i < manifest.images.size(); ++i) {
    const ImageEntry& image = manifest.images[i];
    if (!ids.insert(image.id).second) error("duplicate image id '" + image.id + "'");
    const bool has_color = exists(image.color, "color");
    const bool has_depth = exists(image.depth, "depth");
    const bool has_intrinsics = exists(image.intrinsics, "intrinsics");
    if (!has_intrinsics) continue;
    try {
      const CameraSidecar sidecar = read_intrinsics_json(image.intrinsics);
      const Dims dims{sidecar.intrinsics.width, sidecar.intrinsics.height};
      image_dims[i] = dims;
      auto check = [&](bool present, const std::filesystem::path& path, const char* what) {
        if (!present) return;
        const auto [w, h] = png_dimensions(path);
        if (w != dims.width || h != dims.height) {
          error(std::string(what) + " " + path.string() + " is " + std::to_string(w) + "x" +
                std::to_string(h) + ", intrinsics say " + std::to_string(dims.width) + "x" +
                std::to_string(dims.height));
        }
      };
      check(has_color, image.color, "color");
      check(has_depth, image.depth, "depth");
    } catch (const Error& e) {
      error("image '" + image.id + "': " + e.what());
    }
  }

  for (std::size_t i = 0; i < manifest.annotations.size(); ++i) {
    const AnnotationRecord& record = manifest.annotations[i];
    const std::string where = "annotation " + std::to_string(i);
    ++report.class_counts[class_id(record.label)];
    const auto image_it = std::find_if(manifest.images.begin(), manifest.images.end(),
                                       [&](const ImageEntry& e) { return e.id == record.image_id; });
    if (image_it == manifest.images.end()) {
      error(where + " references unknown image '" + record.image_id + "'");
      continue;
    }
    if (const auto* path = std::get_if<std::filesystem::path>(&record.mask)) {
      if (!exists(*path, "mask")) continue;
    }
    try {
      const InstanceMask mask = load_mask(record.mask);
      const auto& dims = image_dims[static_cast<std::size_t>(image_it - manifest.images.begin())];
      if (dims && (mask.width != dims->width || mask.height != dims->height)) {
        error(where + " mask is " + std::to_string(mask.width) + "x" + std::to_string(mask.height) +
              " but image '" + record.image_id + "' is " + std::to_string(dims->width) + "x" +
              std::to_string(dims->height));
      }
      if (mask_area(mask) == 0) error(where + " has an empty mask");
    } catch (const Error& e) {
      error(where + ": " + e.what());
    }
  }

  std::size_t max_count = 0;
  std::size_t min_count = 0;
  for (std::size_t count : report.class_counts) {
    if (count == 0) continue;
    max_count = std::max(max_count, count);
    min_count = min_count == 0 ? count : std::min(min_count, count);
  }
  if (min_count > 0) {
    const double ratio = static_cast<double>(max_count) / static_cast<double>(min_count);
    if (ratio > options.max_class_ratio) {
      std::ostringstream message;
      message << "class imbalance: max/min annotation count ratio " << ratio << " exceeds "
              << options.max_class_ratio << " (";
      for (int c = 0; c < kNumClasses; ++c) {
        message << (c ? ", " : "") << class_name(static_cast<ClassLabel>(c)) << "="
                << report.class_counts[c];
      }
      message << ")";
      warning(message.str());
    }
  }
  return report;
}

}  // namespace wastegrasp
