#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "issauth/error.hpp"

namespace issauth {

using Point3 = Eigen::Vector3d;
using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

/// A zero normal marks a point whose normal could not be estimated.
inline bool is_valid_normal(const Vector3& n) { return n.squaredNorm() > 0.0; }

/// Points in meters, plus optional per-point unit normals. `normals` is either
/// empty or the same length as `points`.
struct PointCloud {
  std::vector<Point3> points;
  std::vector<Vector3> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }

  bool has_valid_normal(std::size_t i) const {
    return has_normals() && is_valid_normal(normals[i]);
  }

  /// Throws invalid_argument if a coordinate is non-finite, the normal count
  /// differs from the point count, or a non-sentinel normal is not unit length.
  void validate(double normal_tol = 1e-6) const {
    for (const auto& p : points) {
      if (!p.allFinite()) throw Error(Errc::invalid_argument, "non-finite point");
    }
    if (!normals.empty()) {
      if (normals.size() != points.size())
        throw Error(Errc::invalid_argument, "normal count differs from point count");
      for (const auto& n : normals) {
        if (!n.allFinite()) throw Error(Errc::invalid_argument, "non-finite normal");
        if (is_valid_normal(n) && std::abs(n.norm() - 1.0) > normal_tol)
          throw Error(Errc::invalid_argument, "normal is not unit length");
      }
    }
  }

  /// Copy of the subset `indices`, normals carried along.
  PointCloud select(std::span<const std::size_t> indices) const {
    PointCloud out;
    out.points.reserve(indices.size());
    for (auto i : indices) out.points.push_back(points[i]);
    if (has_normals()) {
      out.normals.reserve(indices.size());
      for (auto i : indices) out.normals.push_back(normals[i]);
    }
    return out;
  }
};

/// Proper rigid motion p -> R p + t.
struct RigidTransform {
  Matrix3 rotation = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();

  static RigidTransform identity() { return {}; }

  Point3 apply(const Point3& p) const { return rotation * p + translation; }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }

  bool is_identity() const {
    return rotation == Matrix3::Identity() && translation == Vector3::Zero();
  }

  /// Orthonormal with det = +1 within `tol`.
  bool is_proper(double tol = 1e-9) const {
    const Matrix3 gram = rotation.transpose() * rotation;
    if (((gram - Matrix3::Identity()).cwiseAbs().maxCoeff()) > tol) return false;
    return std::abs(rotation.determinant() - 1.0) <= tol;
  }

  /// Rotation angle in radians of the relative rotation between two transforms.
  static double rotation_angle(const Matrix3& r) {
    const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
  }

  bool operator==(const RigidTransform& other) const {
    return rotation == other.rotation && translation == other.translation;
  }
};

/// compose(a, b) applies b first, then a.
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

/// Rotation of `angle` radians about `axis` (normalized internally).
inline RigidTransform axis_angle_transform(const Vector3& axis, double angle,
                                           const Vector3& translation = Vector3::Zero()) {
  RigidTransform t;
  t.rotation = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  t.translation = translation;
  return t;
}

inline PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t) {
  if (t.is_identity()) return cloud;
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(t.apply(p));
  out.normals.reserve(cloud.normals.size());
  for (const auto& n : cloud.normals) {
    out.normals.push_back(is_valid_normal(n) ? Vector3(t.rotation * n) : Vector3::Zero());
  }
  return out;
}

inline std::vector<Point3> apply_transform(std::span<const Point3> points,
                                           const RigidTransform& t) {
  std::vector<Point3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(t.apply(p));
  return out;
}

/// Population covariance (divided by N) about the mean of the selected points.
inline Matrix3 covariance(std::span<const Point3> points, std::span<const std::size_t> indices) {
  if (indices.empty()) return Matrix3::Zero();
  Vector3 mean = Vector3::Zero();
  for (auto i : indices) mean += points[i];
  mean /= static_cast<double>(indices.size());
  Matrix3 cov = Matrix3::Zero();
  for (auto i : indices) {
    const Vector3 d = points[i] - mean;
    cov.noalias() += d * d.transpose();
  }
  return cov / static_cast<double>(indices.size());
}

namespace detail {

// Kabsch fit; nullopt when fewer than 3 pairs or the source is collinear.
inline std::optional<RigidTransform> fit_rigid(std::span<const Point3> source,
                                               std::span<const Point3> target) {
  const std::size_t n = source.size();
  if (n < 3 || target.size() != n) return std::nullopt;

  Vector3 cs = Vector3::Zero(), ct = Vector3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    cs += source[i];
    ct += target[i];
  }
  cs /= static_cast<double>(n);
  ct /= static_cast<double>(n);

  Matrix3 h = Matrix3::Zero();
  Matrix3 ss = Matrix3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vector3 a = source[i] - cs;
    const Vector3 b = target[i] - ct;
    h.noalias() += a * b.transpose();
    ss.noalias() += a * a.transpose();
  }

  // Collinear (or coincident) source: second-largest spread vanishes.
  Eigen::SelfAdjointEigenSolver<Matrix3> spread(ss, Eigen::EigenvaluesOnly);
  const Vector3 ev = spread.eigenvalues();
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) return std::nullopt;

  Eigen::JacobiSVD<Matrix3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix3& u = svd.matrixU();
  Matrix3 v = svd.matrixV();
  if ((v * u.transpose()).determinant() < 0.0) v.col(2) = -v.col(2);

  RigidTransform t;
  t.rotation = v * u.transpose();
  t.translation = ct - t.rotation * cs;
  return t;
}

}  // namespace detail

/// Least-squares rigid transform (no scale) taking source[i] onto target[i].
inline RigidTransform estimate_rigid_transform(std::span<const Point3> source,
                                               std::span<const Point3> target) {
  if (source.size() != target.size())
    throw Error(Errc::invalid_argument, "source and target lengths differ");
  if (source.size() < 3)
    throw Error(Errc::invalid_argument, "rigid fit needs at least 3 correspondences");
  auto t = detail::fit_rigid(source, target);
  if (!t) throw Error(Errc::degenerate_geometry, "source points are collinear");
  return *t;
}

}  // namespace issauth
