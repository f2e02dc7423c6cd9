#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Eigenvalues>

#include "issauth/error.hpp"
#include "issauth/geometry.hpp"
#include "issauth/kdtree.hpp"

namespace issauth {

/// positive_z: the +z hemisphere rule of orient_normal.
/// toward_centroid: point at the centroid of the cloud, which moves with the
/// scan under any rigid motion.
enum class NormalOrientation { positive_z, toward_centroid };

struct PreprocessParams {
  double voxel_size = 0.1;
  std::size_t normal_neighbors = 30;
  double normal_radius = 0.3;
  double outlier_radius = 0.3;
  std::size_t outlier_min_neighbors = 3;
  NormalOrientation orientation = NormalOrientation::toward_centroid;

  void validate() const {
    if (!(voxel_size > 0.0)) throw Error(Errc::invalid_argument, "voxel_size must be positive");
    if (!(normal_radius > 0.0)) throw Error(Errc::invalid_argument, "normal_radius must be positive");
    if (!(outlier_radius > 0.0)) throw Error(Errc::invalid_argument, "outlier_radius must be positive");
    if (normal_neighbors < 1) throw Error(Errc::invalid_argument, "normal_neighbors must be >= 1");
  }
};

/// Fewest points (including the query point) that define a normal.
inline constexpr std::size_t kMinNormalSupport = 3;
/// Fewest points a preprocessed cloud may have.
inline constexpr std::size_t kMinPreprocessedPoints = 10;

/// Voxel cell coordinates of `p` for a grid anchored at `origin`.
inline std::array<std::int64_t, 3> voxel_cell(const Point3& p, const Point3& origin, double voxel) {
  return {static_cast<std::int64_t>(std::floor((p.x() - origin.x()) / voxel)),
          static_cast<std::int64_t>(std::floor((p.y() - origin.y()) / voxel)),
          static_cast<std::int64_t>(std::floor((p.z() - origin.z()) / voxel))};
}

/// One centroid per occupied cell of a grid anchored at the cloud's minimum
/// corner, in ascending (x, y, z) cell order. Normals are averaged and
/// renormalized; a cell whose normals cancel gets the zero sentinel.
inline PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0)) throw Error(Errc::invalid_argument, "voxel_size must be positive");
  PointCloud out;
  if (cloud.empty()) return out;

  Point3 origin = cloud.points.front();
  for (const auto& p : cloud.points) origin = origin.cwiseMin(p);

  struct Entry {
    std::array<std::int64_t, 3> cell;
    std::size_t index;
  };
  std::vector<Entry> entries;
  entries.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    entries.push_back({voxel_cell(cloud.points[i], origin, voxel_size), i});

  // Members are summed in coordinate order so the result does not depend on
  // input order.
  const bool normals = cloud.has_normals();
  auto member_less = [&](const Entry& a, const Entry& b) {
    if (a.cell != b.cell) return a.cell < b.cell;
    const auto& pa = cloud.points[a.index];
    const auto& pb = cloud.points[b.index];
    for (int k = 0; k < 3; ++k)
      if (pa[k] != pb[k]) return pa[k] < pb[k];
    if (normals) {
      const auto& na = cloud.normals[a.index];
      const auto& nb = cloud.normals[b.index];
      for (int k = 0; k < 3; ++k)
        if (na[k] != nb[k]) return na[k] < nb[k];
    }
    return false;
  };
  std::sort(entries.begin(), entries.end(), member_less);

  for (std::size_t begin = 0; begin < entries.size();) {
    std::size_t end = begin + 1;
    while (end < entries.size() && entries[end].cell == entries[begin].cell) ++end;
    Vector3 sum = Vector3::Zero();
    Vector3 nsum = Vector3::Zero();
    for (std::size_t i = begin; i < end; ++i) {
      sum += cloud.points[entries[i].index];
      if (normals && cloud.has_valid_normal(entries[i].index)) nsum += cloud.normals[entries[i].index];
    }
    out.points.push_back(sum / static_cast<double>(end - begin));
    if (normals) {
      const double len = nsum.norm();
      out.normals.push_back(len > 1e-9 ? Vector3(nsum / len) : Vector3::Zero());
    }
    begin = end;
  }
  return out;
}

/// Flips `n` into the +z hemisphere; when n.z is zero, into +y; then +x.
inline Vector3 orient_normal(const Vector3& n) {
  for (int axis : {2, 1, 0}) {
    if (n[axis] > 0.0) return n;
    if (n[axis] < 0.0) return -n;
  }
  return n;
}

/// Flips `n` to face `target` from `p`; falls back to orient_normal when
/// `n` is perpendicular to that direction.
inline Vector3 orient_normal_toward(const Vector3& n, const Point3& p, const Point3& target) {
  const double side = n.dot(target - p);
  if (side > 0.0) return n;
  if (side < 0.0) return -n;
  return orient_normal(n);
}

/// Eigenvalues ascending with matching unit eigenvectors; negative round-off
/// is clamped to zero.
struct SymmetricEigen {
  Vector3 values;
  Matrix3 vectors;
};

inline SymmetricEigen symmetric_eigen(const Matrix3& m) {
  Eigen::SelfAdjointEigenSolver<Matrix3> solver(m);
  SymmetricEigen out{solver.eigenvalues(), solver.eigenvectors()};
  for (int k = 0; k < 3; ++k) out.values[k] = std::max(out.values[k], 0.0);
  return out;
}

/// PCA normals from up to `normal_neighbors` nearest points within
/// `normal_radius` (the point itself included), oriented per
/// `params.orientation`. Fewer than three supporting points leave the zero
/// sentinel.
inline PointCloud estimate_normals(const PointCloud& cloud, const PreprocessParams& params,
                                   const SpatialIndex& index) {
  if (cloud.empty()) throw Error(Errc::invalid_argument, "estimate_normals on an empty cloud");
  PointCloud out;
  out.points = cloud.points;
  out.normals.assign(cloud.size(), Vector3::Zero());
  Point3 centroid = Point3::Zero();
  for (const auto& p : cloud.points) centroid += p;
  centroid /= static_cast<double>(cloud.size());
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = index.knn_search(cloud.points[i], params.normal_neighbors);
    support.clear();
    for (const auto& n : nn) {
      if (n.distance <= params.normal_radius) support.push_back(n.index);
    }
    if (support.size() < kMinNormalSupport) continue;
    const auto eig = symmetric_eigen(covariance(cloud.points, support));
    const Vector3 n = eig.vectors.col(0).normalized();
    out.normals[i] = params.orientation == NormalOrientation::positive_z
                         ? orient_normal(n)
                         : orient_normal_toward(n, cloud.points[i], centroid);
  }
  return out;
}

inline PointCloud estimate_normals(const PointCloud& cloud, const PreprocessParams& params) {
  if (cloud.empty()) throw Error(Errc::invalid_argument, "estimate_normals on an empty cloud");
  params.validate();
  return estimate_normals(cloud, params, SpatialIndex(cloud));
}

/// Keeps points with at least `min_neighbors` other points within `radius`,
/// in input order.
inline PointCloud radius_outlier_removal(const PointCloud& cloud, double radius,
                                         std::size_t min_neighbors) {
  if (!(radius > 0.0)) throw Error(Errc::invalid_argument, "radius must be positive");
  if (min_neighbors == 0 || cloud.empty()) return cloud;
  const SpatialIndex index(cloud);
  std::vector<std::size_t> keep;
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    index.radius_indices(cloud.points[i], radius, hits);
    const std::size_t others = hits.size() - 1;  // the point itself is always a hit
    if (others >= min_neighbors) keep.push_back(i);
  }
  return cloud.select(keep);
}

/// Downsample, estimate normals, remove outliers, then drop any point still
/// lacking a normal.
inline PointCloud preprocess(const PointCloud& cloud, const PreprocessParams& params) {
  params.validate();
  if (cloud.empty()) throw Error(Errc::insufficient_structure, "empty scan");
  PointCloud down = voxel_downsample(cloud, params.voxel_size);
  down.normals.clear();
  PointCloud with_normals = estimate_normals(down, params, SpatialIndex(down));
  PointCloud kept = radius_outlier_removal(with_normals, params.outlier_radius,
                                           params.outlier_min_neighbors);
  std::vector<std::size_t> valid;
  valid.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i)
    if (kept.has_valid_normal(i)) valid.push_back(i);
  PointCloud result = valid.size() == kept.size() ? std::move(kept) : kept.select(valid);
  if (result.size() < kMinPreprocessedPoints)
    throw Error(Errc::insufficient_structure,
                std::to_string(result.size()) + " points after preprocessing");
  return result;
}

}  // namespace issauth
