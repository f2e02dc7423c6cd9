#pragma once

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "issauth/error.hpp"
#include "issauth/geometry.hpp"

namespace issauth {

static_assert(std::endian::native == std::endian::little,
              "PLY binary I/O assumes a little-endian host");

enum class PlyFormat { ascii, binary_little_endian };

namespace ply_detail {

enum class Scalar { i8, u8, i16, u16, i32, u32, f32, f64 };

inline bool parse_scalar(const std::string& name, Scalar& out) {
  if (name == "char" || name == "int8") out = Scalar::i8;
  else if (name == "uchar" || name == "uint8") out = Scalar::u8;
  else if (name == "short" || name == "int16") out = Scalar::i16;
  else if (name == "ushort" || name == "uint16") out = Scalar::u16;
  else if (name == "int" || name == "int32") out = Scalar::i32;
  else if (name == "uint" || name == "uint32") out = Scalar::u32;
  else if (name == "float" || name == "float32") out = Scalar::f32;
  else if (name == "double" || name == "float64") out = Scalar::f64;
  else return false;
  return true;
}

inline std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::i8: case Scalar::u8: return 1;
    case Scalar::i16: case Scalar::u16: return 2;
    case Scalar::i32: case Scalar::u32: case Scalar::f32: return 4;
    case Scalar::f64: return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::f32;
  bool is_list = false;
  Scalar count_type = Scalar::u8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  PlyFormat format = PlyFormat::ascii;
  std::vector<Element> elements;
};

template <typename T>
T read_raw(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(Errc::ply_truncated, "unexpected end of binary data");
  return v;
}

inline double read_binary_scalar(std::istream& in, Scalar s) {
  switch (s) {
    case Scalar::i8: return read_raw<std::int8_t>(in);
    case Scalar::u8: return read_raw<std::uint8_t>(in);
    case Scalar::i16: return read_raw<std::int16_t>(in);
    case Scalar::u16: return read_raw<std::uint16_t>(in);
    case Scalar::i32: return read_raw<std::int32_t>(in);
    case Scalar::u32: return read_raw<std::uint32_t>(in);
    case Scalar::f32: return read_raw<float>(in);
    case Scalar::f64: return read_raw<double>(in);
  }
  return 0.0;
}

inline double parse_ascii_number(const std::string& token) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec == std::errc::result_out_of_range) {
    // Overflowing literals become infinities and fail the finiteness check.
    return token.front() == '-' ? -HUGE_VAL : HUGE_VAL;
  }
  if (ec != std::errc() || ptr != last) {
    // from_chars does not accept "nan"/"inf" spelled with a sign in all
    // libstdc++ versions; fall back to strtod for those spellings.
    char* end = nullptr;
    v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size())
      throw Error(Errc::ply_malformed_body, "bad ASCII number '" + token + "'");
  }
  return v;
}

inline Header read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::ply_malformed_header, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "ply") throw Error(Errc::ply_malformed_header, "missing 'ply' magic");

  Header h;
  bool have_format = false;
  for (;;) {
    if (!std::getline(in, line)) throw Error(Errc::ply_malformed_header, "missing end_header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string keyword;
    ss >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "end_header") break;
    if (keyword == "format") {
      std::string fmt, version;
      ss >> fmt >> version;
      if (fmt == "ascii") h.format = PlyFormat::ascii;
      else if (fmt == "binary_little_endian") h.format = PlyFormat::binary_little_endian;
      else if (fmt == "binary_big_endian") throw Error(Errc::ply_unsupported_format, fmt);
      else throw Error(Errc::ply_malformed_header, "unknown format '" + fmt + "'");
      have_format = true;
    } else if (keyword == "element") {
      Element e;
      long long count = -1;
      ss >> e.name >> count;
      if (e.name.empty() || !ss || count < 0)
        throw Error(Errc::ply_malformed_header, "bad element line '" + line + "'");
      e.count = static_cast<std::size_t>(count);
      h.elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (h.elements.empty()) throw Error(Errc::ply_malformed_header, "property before element");
      Property p;
      std::string type;
      ss >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ss >> count_type >> item_type >> p.name;
        p.is_list = true;
        if (!parse_scalar(count_type, p.count_type) || !parse_scalar(item_type, p.type))
          throw Error(Errc::ply_malformed_header, "bad list property '" + line + "'");
      } else {
        ss >> p.name;
        if (!parse_scalar(type, p.type))
          throw Error(Errc::ply_malformed_header, "unknown property type '" + type + "'");
      }
      if (p.name.empty()) throw Error(Errc::ply_malformed_header, "unnamed property");
      h.elements.back().properties.push_back(std::move(p));
    } else {
      throw Error(Errc::ply_malformed_header, "unknown header keyword '" + keyword + "'");
    }
  }
  if (!have_format) throw Error(Errc::ply_malformed_header, "missing format line");
  return h;
}

inline void skip_element(std::istream& in, const Element& e, PlyFormat format) {
  if (format == PlyFormat::ascii) {
    std::string line;
    for (std::size_t i = 0; i < e.count; ++i) {
      if (!std::getline(in, line)) throw Error(Errc::ply_truncated, "element '" + e.name + "'");
    }
    return;
  }
  bool fixed = true;
  std::size_t stride = 0;
  for (const auto& p : e.properties) {
    if (p.is_list) fixed = false;
    else stride += scalar_size(p.type);
  }
  if (fixed) {
    in.seekg(static_cast<std::streamoff>(stride * e.count), std::ios::cur);
    if (!in) throw Error(Errc::ply_truncated, "element '" + e.name + "'");
    return;
  }
  for (std::size_t i = 0; i < e.count; ++i) {
    for (const auto& p : e.properties) {
      if (p.is_list) {
        const auto n = static_cast<std::size_t>(read_binary_scalar(in, p.count_type));
        in.seekg(static_cast<std::streamoff>(n * scalar_size(p.type)), std::ios::cur);
      } else {
        in.seekg(static_cast<std::streamoff>(scalar_size(p.type)), std::ios::cur);
      }
      if (!in) throw Error(Errc::ply_truncated, "element '" + e.name + "'");
    }
  }
}

}  // namespace ply_detail

/// Reads the `vertex` element (x, y, z and optional nx, ny, nz) from an ASCII
/// or binary little-endian PLY stream. Other elements are skipped; a note for
/// each is appended to `warnings` when given.
inline PointCloud read_ply(std::istream& in, std::vector<std::string>* warnings = nullptr) {
  using namespace ply_detail;
  const Header h = read_header(in);

  const Element* vertex = nullptr;
  for (const auto& e : h.elements) {
    if (e.name == "vertex") {
      vertex = &e;
      break;
    }
  }
  if (!vertex) throw Error(Errc::ply_malformed_header, "no vertex element");

  int slot[6] = {-1, -1, -1, -1, -1, -1};
  static const char* kNames[6] = {"x", "y", "z", "nx", "ny", "nz"};
  for (std::size_t i = 0; i < vertex->properties.size(); ++i) {
    const auto& p = vertex->properties[i];
    for (int k = 0; k < 6; ++k) {
      if (p.name == kNames[k]) {
        if (p.is_list || (p.type != Scalar::f32 && p.type != Scalar::f64))
          throw Error(Errc::ply_malformed_header, "property '" + p.name + "' must be float or double");
        slot[k] = static_cast<int>(i);
      }
    }
  }
  if (slot[0] < 0 || slot[1] < 0 || slot[2] < 0)
    throw Error(Errc::ply_malformed_header, "vertex element lacks x, y, z");
  const bool with_normals = slot[3] >= 0 && slot[4] >= 0 && slot[5] >= 0;
  if (!with_normals && (slot[3] >= 0 || slot[4] >= 0 || slot[5] >= 0) && warnings)
    warnings->push_back("partial normal properties ignored");

  PointCloud cloud;
  std::vector<double> values(vertex->properties.size());
  std::string line;

  for (const auto& e : h.elements) {
    if (&e != vertex) {
      if (warnings) warnings->push_back("skipped element '" + e.name + "'");
      skip_element(in, e, h.format);
      continue;
    }
    cloud.points.reserve(e.count);
    if (with_normals) cloud.normals.reserve(e.count);
    for (std::size_t v = 0; v < e.count; ++v) {
      if (h.format == PlyFormat::ascii) {
        if (!std::getline(in, line)) throw Error(Errc::ply_truncated, "vertex " + std::to_string(v));
        std::istringstream ss(line);
        std::string token;
        for (std::size_t i = 0; i < e.properties.size(); ++i) {
          const auto& p = e.properties[i];
          if (!(ss >> token)) throw Error(Errc::ply_truncated, "vertex " + std::to_string(v));
          if (p.is_list) {
            const auto n = static_cast<std::size_t>(parse_ascii_number(token));
            for (std::size_t j = 0; j < n; ++j) {
              if (!(ss >> token)) throw Error(Errc::ply_truncated, "vertex " + std::to_string(v));
            }
            values[i] = 0.0;
          } else {
            values[i] = parse_ascii_number(token);
          }
        }
      } else {
        for (std::size_t i = 0; i < e.properties.size(); ++i) {
          const auto& p = e.properties[i];
          if (p.is_list) {
            const auto n = static_cast<std::size_t>(read_binary_scalar(in, p.count_type));
            for (std::size_t j = 0; j < n; ++j) read_binary_scalar(in, p.type);
            values[i] = 0.0;
          } else {
            values[i] = read_binary_scalar(in, p.type);
          }
        }
      }
      const Point3 pt(values[slot[0]], values[slot[1]], values[slot[2]]);
      if (!pt.allFinite())
        throw Error(Errc::ply_non_finite, "vertex " + std::to_string(v));
      cloud.points.push_back(pt);
      if (with_normals) {
        const Vector3 n(values[slot[3]], values[slot[4]], values[slot[5]]);
        if (!n.allFinite()) throw Error(Errc::ply_non_finite, "normal " + std::to_string(v));
        cloud.normals.push_back(n);
      }
    }
    // Elements after the vertex block carry nothing we need.
    for (auto it = &e + 1; it != h.elements.data() + h.elements.size(); ++it) {
      if (warnings) warnings->push_back("skipped element '" + it->name + "'");
    }
    break;
  }
  return cloud;
}

inline PointCloud load_ply(const std::filesystem::path& path,
                           std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  return read_ply(in, warnings);
}

namespace ply_detail {

inline void append_number(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

template <typename T>
void append_raw(std::string& out, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.append(bytes, sizeof(T));
}

}  // namespace ply_detail

/// Serializes a cloud as PLY. Coordinates and normals are written as doubles;
/// ASCII uses shortest round-trip formatting, so both variants reload exactly.
inline std::string write_ply(const PointCloud& cloud, PlyFormat format) {
  using namespace ply_detail;
  const bool normals = cloud.has_normals();
  std::string out;
  out += "ply\n";
  out += format == PlyFormat::ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  out += "comment issauth\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  if (normals) out += "property double nx\nproperty double ny\nproperty double nz\n";
  out += "end_header\n";

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    if (format == PlyFormat::ascii) {
      append_number(out, p.x());
      out += ' ';
      append_number(out, p.y());
      out += ' ';
      append_number(out, p.z());
      if (normals) {
        const auto& n = cloud.normals[i];
        for (int k = 0; k < 3; ++k) {
          out += ' ';
          append_number(out, n[k]);
        }
      }
      out += '\n';
    } else {
      append_raw(out, p.x());
      append_raw(out, p.y());
      append_raw(out, p.z());
      if (normals) {
        const auto& n = cloud.normals[i];
        append_raw(out, n.x());
        append_raw(out, n.y());
        append_raw(out, n.z());
      }
    }
  }
  return out;
}

inline void save_ply(const PointCloud& cloud, const std::filesystem::path& path,
                     PlyFormat format = PlyFormat::binary_little_endian) {
  const std::string bytes = write_ply(cloud, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io_error, "write failed for " + path.string());
}

}  // namespace issauth
