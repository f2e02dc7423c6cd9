#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace issauth;
using issauth::testing::random_cloud;
using issauth::testing::temp_path;

namespace {

PointCloud parse(const std::string& text, std::vector<std::string>* warnings = nullptr) {
  std::istringstream in(text);
  return read_ply(in, warnings);
}

Errc parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::invalid_argument;
}

const char* kHeader2 =
    "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n";

std::string little_endian_floats(std::initializer_list<float> values) {
  std::string out;
  for (float v : values) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
  }
  return out;
}

}  // namespace

TEST(Ply, AsciiZeroVertices) {
  const auto c = parse("ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\n"
                       "property float z\nend_header\n");
  EXPECT_TRUE(c.empty());
}

TEST(Ply, AsciiTwoVerticesInOrder) {
  const auto c = parse(std::string(kHeader2) + "0 0 0\n1 2 3\n");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.points[0], Point3(0, 0, 0));
  EXPECT_EQ(c.points[1], Point3(1, 2, 3));
  EXPECT_FALSE(c.has_normals());
}

TEST(Ply, ReadsNormalsAndSkipsOtherElementsWithWarning) {
  const std::string text =
      "ply\nformat ascii 1.0\ncomment test\nelement vertex 1\nproperty double x\nproperty double y\n"
      "property double z\nproperty uchar red\nproperty double nx\nproperty double ny\nproperty double nz\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n1 2 3 200 0 0 1\n3 0 0 0\n";
  std::vector<std::string> warnings;
  const auto c = parse(text, &warnings);
  ASSERT_EQ(c.size(), 1u);
  ASSERT_TRUE(c.has_normals());
  EXPECT_EQ(c.normals[0], Vector3(0, 0, 1));
  EXPECT_FALSE(warnings.empty());
}

TEST(Ply, BinaryLittleEndianFloat) {
  std::string text =
      "ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
      "property float z\nend_header\n";
  text += little_endian_floats({0.5f, 1.5f, -2.0f, 3.0f, 4.0f, 5.0f});
  const auto c = parse(text);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.points[0], Point3(0.5, 1.5, -2.0));
  EXPECT_EQ(c.points[1], Point3(3, 4, 5));
}

TEST(Ply, DistinctErrors) {
  EXPECT_EQ(parse_error("plx\n"), Errc::ply_malformed_header);
  EXPECT_EQ(parse_error("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n"), Errc::ply_malformed_header);
  EXPECT_EQ(parse_error("ply\nformat binary_big_endian 1.0\nelement vertex 0\nproperty float x\nproperty float y\n"
                        "property float z\nend_header\n"),
            Errc::ply_unsupported_format);
  EXPECT_EQ(parse_error("ply\nformat ascii 1.0\nelement vertex 1\nproperty int x\nproperty int y\n"
                        "property int z\nend_header\n1 2 3\n"),
            Errc::ply_malformed_header);
  EXPECT_EQ(parse_error(std::string(kHeader2) + "0 0 0\n1 nan 3\n"), Errc::ply_non_finite);
  EXPECT_EQ(parse_error(std::string(kHeader2) + "0 0 0\n1 inf 3\n"), Errc::ply_non_finite);
  EXPECT_EQ(parse_error(std::string(kHeader2) + "0 0 0\n"), Errc::ply_truncated);
  EXPECT_EQ(parse_error(std::string(kHeader2) + "0 0 0\n1 abc 3\n"), Errc::ply_malformed_body);
}

TEST(Ply, MissingFileIsIoError) {
  try {
    load_ply(temp_path("does_not_exist.ply"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::io_error);
  }
}

TEST(Ply, EmptyCloudWritesZeroVertices) {
  const std::string text = write_ply(PointCloud{}, PlyFormat::ascii);
  EXPECT_NE(text.find("element vertex 0"), std::string::npos);
  EXPECT_TRUE(parse(text).empty());
}

TEST(Ply, NormalsWrittenIffPresent) {
  PointCloud c;
  c.points = {{1, 2, 3}};
  EXPECT_EQ(write_ply(c, PlyFormat::ascii).find("property double nx"), std::string::npos);
  c.normals = {{0, 1, 0}};
  EXPECT_NE(write_ply(c, PlyFormat::ascii).find("property double nx"), std::string::npos);
}

// Write-then-read oracle, both formats, 1000 random clouds.
TEST(Ply, RoundTripIsExact) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    PointCloud c = random_cloud(rng, rng.index(40), rng.uniform(0.001, 1e4));
    if (trial % 3 == 0)
      for (std::size_t i = 0; i < c.size(); ++i) c.normals.push_back(rng.unit_vector());
    for (auto fmt : {PlyFormat::binary_little_endian, PlyFormat::ascii}) {
      const PointCloud back = parse(write_ply(c, fmt));
      ASSERT_EQ(back.points, c.points);
      ASSERT_EQ(back.normals, c.normals);
    }
  }
}

TEST(Ply, ThousandPointBinaryFileRoundTripsBitExactly) {
  Rng rng(2);
  const PointCloud c = random_cloud(rng, 1000, 10.0);
  const auto path = temp_path("round_trip.ply");
  save_ply(c, path);
  EXPECT_EQ(load_ply(path).points, c.points);
}

TEST(Ply, SaveLoadSaveIsByteIdentical) {
  Rng rng(3);
  PointCloud c = random_cloud(rng, 500, 3.0);
  for (std::size_t i = 0; i < c.size(); ++i) c.normals.push_back(rng.unit_vector());
  const auto first = temp_path("first.ply"), second = temp_path("second.ply");
  save_ply(c, first);
  save_ply(load_ply(first), second);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  EXPECT_EQ(slurp(first), slurp(second));
}
