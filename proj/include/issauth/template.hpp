#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "issauth/config.hpp"
#include "issauth/error.hpp"
#include "issauth/fpfh.hpp"
#include "issauth/geometry.hpp"

namespace issauth {

/// Enrolled identity: the only data that leaves the device.
struct Template {
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t version = kVersion;
  std::vector<Point3> keypoint_positions;
  std::vector<FpfhDescriptor> descriptors;  // entries representable as float32
  Fingerprint params_fingerprint{};
  std::uint64_t raw_point_count = 0;
  std::int64_t created_at = 0;  // unix seconds

  std::size_t size() const { return keypoint_positions.size(); }
  std::size_t descriptor_dimension() const { return descriptors.empty() ? 0 : descriptors.front().size(); }

  bool operator==(const Template&) const = default;
};

/// Rounds every descriptor entry to float32, the stored precision.
inline void quantize_descriptors(std::vector<FpfhDescriptor>& descriptors) {
  for (auto& d : descriptors)
    for (auto& v : d.histogram) v = static_cast<double>(static_cast<float>(v));
}

namespace template_detail {

static_assert(std::endian::native == std::endian::little, "template I/O assumes a little-endian host");

inline constexpr char kMagic[4] = {'I', 'S', 'S', 'R'};
inline constexpr std::size_t kHeaderSize = 4 + 4 + 4 + 4 + 8 + 32 + 8;
inline constexpr std::size_t kTrailerSize = 4;

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> in, std::size_t& pos) {
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace template_detail

/// Exact byte size of a serialized template.
inline std::size_t serialized_size(std::size_t keypoints, std::size_t dimension) {
  return template_detail::kHeaderSize + keypoints * (3 * sizeof(double) + dimension * sizeof(float)) +
         template_detail::kTrailerSize;
}

/// Little-endian layout: "ISSR", version u32, count u32, dimension u32,
/// raw_point_count u64, fingerprint[32], created_at i64, count*3 f64 positions,
/// count*dimension f32 descriptors, CRC32 of everything before it.
inline std::vector<std::uint8_t> serialize_template(const Template& t) {
  using namespace template_detail;
  if (t.descriptors.size() != t.keypoint_positions.size())
    throw Error(Errc::invalid_template, "descriptor and keypoint counts differ");
  const std::size_t dim = t.descriptor_dimension();
  for (const auto& d : t.descriptors)
    if (d.size() != dim) throw Error(Errc::invalid_template, "ragged descriptors");

  std::vector<std::uint8_t> out;
  out.reserve(serialized_size(t.size(), dim));
  out.insert(out.end(), kMagic, kMagic + 4);
  put<std::uint32_t>(out, t.version);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
  put<std::uint64_t>(out, t.raw_point_count);
  out.insert(out.end(), t.params_fingerprint.begin(), t.params_fingerprint.end());
  put<std::int64_t>(out, t.created_at);
  for (const auto& p : t.keypoint_positions) {
    put<double>(out, p.x());
    put<double>(out, p.y());
    put<double>(out, p.z());
  }
  for (const auto& d : t.descriptors)
    for (double v : d.histogram) put<float>(out, static_cast<float>(v));
  put<std::uint32_t>(out, crc32_of(out));
  return out;
}

inline Template deserialize_template(std::span<const std::uint8_t> bytes) {
  using namespace template_detail;
  if (bytes.size() < 4) throw Error(Errc::template_truncated, "shorter than the magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(Errc::template_bad_magic);
  if (bytes.size() < 8) throw Error(Errc::template_truncated, "shorter than the version");
  std::size_t pos = 4;
  Template t;
  t.version = get<std::uint32_t>(bytes, pos);
  if (t.version != Template::kVersion)
    throw Error(Errc::template_unsupported_version, std::to_string(t.version));
  if (bytes.size() < kHeaderSize + kTrailerSize) throw Error(Errc::template_truncated, "incomplete header");
  const auto count = get<std::uint32_t>(bytes, pos);
  const auto dim = get<std::uint32_t>(bytes, pos);
  t.raw_point_count = get<std::uint64_t>(bytes, pos);
  std::memcpy(t.params_fingerprint.data(), bytes.data() + pos, 32);
  pos += 32;
  t.created_at = get<std::int64_t>(bytes, pos);

  const std::size_t expected = serialized_size(count, dim);
  if (bytes.size() < expected) throw Error(Errc::template_truncated, "body shorter than declared");
  if (bytes.size() > expected) throw Error(Errc::template_malformed, "trailing bytes");
  std::size_t crc_pos = expected - kTrailerSize;
  const auto stored_crc = get<std::uint32_t>(bytes, crc_pos);
  if (stored_crc != crc32_of(bytes.first(expected - kTrailerSize)))
    throw Error(Errc::template_checksum_mismatch);

  t.keypoint_positions.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const double x = get<double>(bytes, pos);
    const double y = get<double>(bytes, pos);
    const double z = get<double>(bytes, pos);
    t.keypoint_positions.emplace_back(x, y, z);
    if (!t.keypoint_positions.back().allFinite())
      throw Error(Errc::template_malformed, "non-finite keypoint");
  }
  t.descriptors.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    t.descriptors[i].histogram.resize(dim);
    for (std::uint32_t k = 0; k < dim; ++k) t.descriptors[i].histogram[k] = get<float>(bytes, pos);
  }
  return t;
}

inline void save_template(const Template& t, const std::filesystem::path& path) {
  const auto bytes = serialize_template(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io_error, "write failed for " + path.string());
}

inline Template load_template(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_template(bytes);
}

/// Debug dump: one line per keypoint, "x y z d0 d1 ...".
inline std::string template_to_text(const Template& t) {
  std::string out = "# issauth template v" + std::to_string(t.version) + " keypoints=" +
                    std::to_string(t.size()) + " raw_points=" + std::to_string(t.raw_point_count) +
                    " fingerprint=" + to_hex(t.params_fingerprint) + "\n";
  char buf[64];
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& p = t.keypoint_positions[i];
    for (int k = 0; k < 3; ++k) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), p[k]);
      out.append(buf, ptr).append(" ");
    }
    const auto& h = t.descriptors[i].histogram;
    for (std::size_t k = 0; k < h.size(); ++k) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), static_cast<float>(h[k]));
      out.append(buf, ptr);
      if (k + 1 < h.size()) out += ' ';
    }
    out += '\n';
  }
  return out;
}

}  // namespace issauth
