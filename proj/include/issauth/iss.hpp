#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "issauth/error.hpp"
#include "issauth/geometry.hpp"
#include "issauth/kdtree.hpp"
#include "issauth/preprocess.hpp"

namespace issauth {

struct IssParams {
  double salient_radius = 0.2;
  double non_max_radius = 0.2;
  double gamma_21 = 0.95;
  double gamma_32 = 0.95;
  std::size_t min_neighbors = 5;

  void validate() const {
    if (!(salient_radius > 0.0) || !(non_max_radius > 0.0))
      throw Error(Errc::invalid_argument, "ISS radii must be positive");
    if (!(gamma_21 > 0.0 && gamma_21 <= 1.0) || !(gamma_32 > 0.0 && gamma_32 <= 1.0))
      throw Error(Errc::invalid_argument, "ISS gamma thresholds must lie in (0, 1]");
    if (min_neighbors < 1) throw Error(Errc::invalid_argument, "ISS min_neighbors must be >= 1");
  }
};

/// Selected keypoints, sorted by descending saliency (ties: ascending index).
struct KeypointSet {
  std::vector<std::size_t> indices;
  std::vector<Point3> positions;
  std::vector<double> saliency;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }

  /// Every point of `cloud`, in order, with zero saliency.
  static KeypointSet all_points(const PointCloud& cloud) {
    KeypointSet ks;
    ks.indices.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) ks.indices[i] = i;
    ks.positions = cloud.points;
    ks.saliency.assign(cloud.size(), 0.0);
    return ks;
  }

  KeypointSet select(std::span<const std::size_t> which) const {
    KeypointSet out;
    for (auto w : which) {
      out.indices.push_back(indices[w]);
      out.positions.push_back(positions[w]);
      out.saliency.push_back(saliency[w]);
    }
    return out;
  }
};

/// Relative slack on the salient radius, so that points sitting exactly on
/// the sphere are kept or dropped together.
inline constexpr double kRadiusSlack = 1e-9;

struct LocalCovariance {
  Matrix3 matrix = Matrix3::Zero();
  std::size_t neighbor_count = 0;  // excludes the center
};

/// Population covariance of every point within `radius` of the center,
/// the center included.
inline LocalCovariance local_covariance(const PointCloud& cloud, const SpatialIndex& index,
                                        std::size_t center_idx, double radius) {
  if (center_idx >= cloud.size()) throw Error(Errc::invalid_argument, "center index out of range");
  std::vector<std::size_t> hits;
  index.radius_indices(cloud.points[center_idx], radius * (1.0 + kRadiusSlack), hits);
  LocalCovariance out;
  out.neighbor_count = hits.empty() ? 0 : hits.size() - 1;
  if (hits.size() > 1) out.matrix = covariance(cloud.points, hits);
  return out;
}

/// Eigenvalue-ratio test. `lambda` is sorted descending.
inline bool iss_candidate(const Vector3& lambda, double gamma_21, double gamma_32) {
  if (!(lambda[0] > 0.0) || !(lambda[1] > 0.0)) return false;
  return lambda[1] / lambda[0] < gamma_21 && lambda[2] / lambda[1] < gamma_32;
}

/// Descending eigenvalues of a local covariance, clamped at zero.
inline Vector3 descending_eigenvalues(const Matrix3& cov) {
  const Vector3 asc = symmetric_eigen(cov).values;
  return Vector3(asc[2], asc[1], asc[0]);
}

inline KeypointSet extract_iss_keypoints(const PointCloud& cloud, const IssParams& params,
                                         const SpatialIndex& index) {
  params.validate();
  if (cloud.empty()) throw Error(Errc::invalid_argument, "ISS on an empty cloud");

  const std::size_t n = cloud.size();
  std::vector<double> saliency(n, 0.0);
  std::vector<char> candidate(n, 0);
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < n; ++i) {
    index.radius_indices(cloud.points[i], params.salient_radius * (1.0 + kRadiusSlack), hits);
    if (hits.size() - 1 < params.min_neighbors) continue;
    const Vector3 lambda = descending_eigenvalues(covariance(cloud.points, hits));
    if (!iss_candidate(lambda, params.gamma_21, params.gamma_32)) continue;
    candidate[i] = 1;
    saliency[i] = lambda[2];
  }

  // A candidate survives if it beats every other candidate within
  // non_max_radius; equal saliency goes to the lower index.
  std::vector<std::size_t> cand_ids;
  std::vector<Point3> cand_points;
  for (std::size_t i = 0; i < n; ++i) {
    if (!candidate[i]) continue;
    cand_ids.push_back(i);
    cand_points.push_back(cloud.points[i]);
  }
  std::vector<std::size_t> kept;
  if (!cand_ids.empty()) {
    const SpatialIndex cand_index{std::span<const Point3>(cand_points)};
    for (std::size_t c = 0; c < cand_ids.size(); ++c) {
      const std::size_t i = cand_ids[c];
      cand_index.radius_indices(cand_points[c], params.non_max_radius, hits);
      bool is_max = true;
      for (auto h : hits) {
        const std::size_t j = cand_ids[h];
        if (j == i) continue;
        if (saliency[j] > saliency[i] || (saliency[j] == saliency[i] && j < i)) {
          is_max = false;
          break;
        }
      }
      if (is_max) kept.push_back(i);
    }
  }
  std::sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
    if (saliency[a] != saliency[b]) return saliency[a] > saliency[b];
    return a < b;
  });

  KeypointSet out;
  out.indices = kept;
  out.positions.reserve(kept.size());
  out.saliency.reserve(kept.size());
  for (auto i : kept) {
    out.positions.push_back(cloud.points[i]);
    out.saliency.push_back(saliency[i]);
  }
  return out;
}

inline KeypointSet extract_iss_keypoints(const PointCloud& cloud, const IssParams& params) {
  if (cloud.empty()) throw Error(Errc::invalid_argument, "ISS on an empty cloud");
  return extract_iss_keypoints(cloud, params, SpatialIndex(cloud));
}

}  // namespace issauth
