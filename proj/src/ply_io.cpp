#include "wastegrasp/ply_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "wastegrasp/error.hpp"

namespace wastegrasp {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

ScalarType parse_type(const std::string& name) {
  if (name == "char" || name == "int8") return ScalarType::Int8;
  if (name == "uchar" || name == "uint8") return ScalarType::UInt8;
  if (name == "short" || name == "int16") return ScalarType::Int16;
  if (name == "ushort" || name == "uint16") return ScalarType::UInt16;
  if (name == "int" || name == "int32") return ScalarType::Int32;
  if (name == "uint" || name == "uint32") return ScalarType::UInt32;
  if (name == "float" || name == "float32") return ScalarType::Float32;
  if (name == "double" || name == "float64") return ScalarType::Float64;
  throw Error(ErrorCode::ParseError, "unknown PLY property type '" + name + "'");
}

std::size_t type_size(ScalarType t) {
  switch (t) {
    case ScalarType::Int8:
    case ScalarType::UInt8: return 1;
    case ScalarType::Int16:
    case ScalarType::UInt16: return 2;
    case ScalarType::Int32:
    case ScalarType::UInt32:
    case ScalarType::Float32: return 4;
    case ScalarType::Float64: return 8;
  }
  return 0;
}

template <typename T>
T read_raw(std::istream& in) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error(ErrorCode::ParseError, "unexpected end of binary PLY data");
  }
  return value;
}

double read_binary(std::istream& in, ScalarType t) {
  switch (t) {
    case ScalarType::Int8: return read_raw<std::int8_t>(in);
    case ScalarType::UInt8: return read_raw<std::uint8_t>(in);
    case ScalarType::Int16: return read_raw<std::int16_t>(in);
    case ScalarType::UInt16: return read_raw<std::uint16_t>(in);
    case ScalarType::Int32: return read_raw<std::int32_t>(in);
    case ScalarType::UInt32: return read_raw<std::uint32_t>(in);
    case ScalarType::Float32: return read_raw<float>(in);
    case ScalarType::Float64: return read_raw<double>(in);
  }
  return 0.0;
}

double read_ascii(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw Error(ErrorCode::ParseError, "unexpected end of ASCII PLY data");
  try {
    std::size_t used = 0;
    const double value = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "bad PLY value '" + token + "'");
  }
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::Float32;
  bool is_list = false;
  ScalarType count_type = ScalarType::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

}  // namespace

void write_ply(std::ostream& out, const PointCloud& cloud, PlyFormat format) {
  cloud.check_consistent();
  out << "ply\n"
      << (format == PlyFormat::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n")
      << "element vertex " << cloud.size() << '\n'
      << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.has_colors()) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (cloud.has_normals()) out << "property double nx\nproperty double ny\nproperty double nz\n";
  out << "end_header\n";

  if (format == PlyFormat::Ascii) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto& p = cloud.points[i];
      out << p.x() << ' ' << p.y() << ' ' << p.z();
      if (cloud.has_colors()) {
        const Rgb& c = cloud.colors[i];
        out << ' ' << int(c[0]) << ' ' << int(c[1]) << ' ' << int(c[2]);
      }
      if (cloud.has_normals()) {
        const auto& n = cloud.normals[i];
        out << ' ' << n.x() << ' ' << n.y() << ' ' << n.z();
      }
      out << '\n';
    }
  } else {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      for (int a = 0; a < 3; ++a) put(out, cloud.points[i][a]);
      if (cloud.has_colors()) {
        for (int a = 0; a < 3; ++a) put(out, cloud.colors[i][a]);
      }
      if (cloud.has_normals()) {
        for (int a = 0; a < 3; ++a) put(out, cloud.normals[i][a]);
      }
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing PLY data");
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, PlyFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_ply(out, cloud, format);
}

PointCloud read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") {
    throw Error(ErrorCode::ParseError, "missing 'ply' magic");
  }
  bool ascii = false;
  bool have_format = false;
  std::vector<Element> elements;
  while (true) {
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "PLY header not terminated");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream tokens(line);
    std::string keyword;
    tokens >> keyword;
    if (keyword == "end_header") break;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "format") {
      std::string kind;
      tokens >> kind;
      if (kind == "ascii") {
        ascii = true;
      } else if (kind != "binary_little_endian") {
        throw Error(ErrorCode::ParseError, "unsupported PLY format '" + kind + "'");
      }
      have_format = true;
    } else if (keyword == "element") {
      Element element;
      if (!(tokens >> element.name >> element.count)) {
        throw Error(ErrorCode::ParseError, "malformed element line: " + line);
      }
      elements.push_back(std::move(element));
    } else if (keyword == "property") {
      if (elements.empty()) throw Error(ErrorCode::ParseError, "property before any element");
      Property property;
      std::string type;
      tokens >> type;
      if (type == "list") {
        std::string count_type;
        tokens >> count_type >> type;
        property.is_list = true;
        property.count_type = parse_type(count_type);
      }
      property.type = parse_type(type);
      if (!(tokens >> property.name)) throw Error(ErrorCode::ParseError, "malformed property line: " + line);
      elements.back().properties.push_back(std::move(property));
    } else {
      throw Error(ErrorCode::ParseError, "unexpected PLY header line: " + line);
    }
  }
  if (!have_format) throw Error(ErrorCode::ParseError, "PLY header lacks a format line");

  auto read_value = [&](ScalarType t) { return ascii ? read_ascii(in) : read_binary(in, t); };
  auto skip_property = [&](const Property& p) {
    const std::size_t n = p.is_list ? static_cast<std::size_t>(read_value(p.count_type)) : 1;
    if (ascii) {
      for (std::size_t i = 0; i < n; ++i) read_ascii(in);
    } else {
      in.ignore(static_cast<std::streamsize>(n * type_size(p.type)));
    }
  };

  PointCloud cloud;
  for (const Element& element : elements) {
    if (element.name != "vertex") {
      for (std::size_t i = 0; i < element.count; ++i) {
        for (const auto& p : element.properties) skip_property(p);
      }
      continue;
    }
    // Slot of each property: 0-2 position, 3-5 color, 6-8 normal, -1 other.
    static const char* kNames[9] = {"x", "y", "z", "red", "green", "blue", "nx", "ny", "nz"};
    std::vector<int> slots;
    std::array<bool, 9> present{};
    for (const auto& p : element.properties) {
      int slot = -1;
      for (int s = 0; s < 9; ++s) {
        if (p.name == kNames[s] && !p.is_list) slot = s;
      }
      if (slot >= 0) present[slot] = true;
      slots.push_back(slot);
    }
    for (int s = 0; s < 3; ++s) {
      if (!present[s]) throw Error(ErrorCode::ParseError, std::string("vertex lacks property ") + kNames[s]);
    }
    const bool colors = present[3] && present[4] && present[5];
    const bool normals = present[6] && present[7] && present[8];
    cloud.points.resize(element.count);
    if (colors) cloud.colors.resize(element.count);
    if (normals) cloud.normals.resize(element.count);
    for (std::size_t i = 0; i < element.count; ++i) {
      for (std::size_t j = 0; j < element.properties.size(); ++j) {
        const Property& p = element.properties[j];
        const int slot = slots[j];
        if (slot < 0 || (slot >= 3 && slot < 6 && !colors) || (slot >= 6 && !normals)) {
          skip_property(p);
          continue;
        }
        const double value = read_value(p.type);
        if (slot < 3) {
          cloud.points[i][slot] = value;
        } else if (slot < 6) {
          cloud.colors[i][slot - 3] = static_cast<std::uint8_t>(value);
        } else {
          cloud.normals[i][slot - 6] = value;
        }
      }
    }
  }
  if (!in && !in.eof()) throw Error(ErrorCode::ParseError, "truncated PLY data");
  return cloud;
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_ply(in);
}

}  // namespace wastegrasp
