#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "issauth/issauth.hpp"

namespace issauth::testing {

inline std::vector<Point3> random_points(Rng& rng, std::size_t n, double extent = 1.0) {
  std::vector<Point3> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    pts.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(-extent, extent));
  return pts;
}

inline PointCloud random_cloud(Rng& rng, std::size_t n, double extent = 1.0) {
  PointCloud c;
  c.points = random_points(rng, n, extent);
  return c;
}

/// Regular grid on z = 0 with `n` x `n` nodes at `spacing`.
inline PointCloud plane_grid(std::size_t n, double spacing) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      c.points.emplace_back(static_cast<double>(i) * spacing, static_cast<double>(j) * spacing, 0.0);
  return c;
}

inline std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "issauth_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace issauth::testing
