#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include "issauth/error.hpp"
#include "issauth/geometry.hpp"
#include "issauth/iss.hpp"
#include "issauth/kdtree.hpp"

namespace issauth {

struct FpfhParams {
  double feature_radius = 0.5;
  std::size_t bins_per_feature = 11;

  std::size_t dimension() const { return 3 * bins_per_feature; }

  void validate() const {
    if (!(feature_radius > 0.0)) throw Error(Errc::invalid_argument, "feature_radius must be positive");
    if (bins_per_feature < 2) throw Error(Errc::invalid_argument, "bins_per_feature must be >= 2");
  }
};

/// Three concatenated sub-histograms (alpha, phi, theta), each summing to 100.
struct FpfhDescriptor {
  std::vector<double> histogram;

  std::size_t size() const { return histogram.size(); }
  bool operator==(const FpfhDescriptor&) const = default;
};

enum class PairStatus { ok, coincident, degenerate_frame };

struct PairFeatures {
  PairStatus status = PairStatus::ok;
  double alpha = 0.0;
  double phi = 0.0;
  double theta = 0.0;

  bool ok() const { return status == PairStatus::ok; }
};

/// Darboux-frame angles between a source point/normal and a target point/normal.
/// Roles are taken as given; see oriented_pair_features for the role swap.
inline PairFeatures pair_features(const Point3& ps, const Vector3& ns, const Point3& pt,
                                  const Vector3& nt) {
  PairFeatures f;
  const Vector3 d = pt - ps;
  const double len = d.norm();
  if (len < 1e-9) {
    f.status = PairStatus::coincident;
    return f;
  }
  const Vector3 dh = d / len;
  const Vector3& u = ns;
  Vector3 v = u.cross(dh);
  const double vlen = v.norm();
  if (vlen < 1e-6) {
    f.status = PairStatus::degenerate_frame;
    return f;
  }
  v /= vlen;
  const Vector3 w = u.cross(v);
  f.alpha = v.dot(nt);
  f.phi = u.dot(dh);
  f.theta = std::atan2(w.dot(nt), u.dot(nt));
  return f;
}

/// Picks as source whichever endpoint's normal makes the smaller angle with the
/// connecting line, then evaluates pair_features. Angles within 1e-9 count
/// as tied; a tie goes to the ordering with the larger phi.
inline PairFeatures oriented_pair_features(const Point3& p1, const Vector3& n1, const Point3& p2,
                                           const Vector3& n2) {
  const Vector3 d = p2 - p1;
  const double len = d.norm();
  if (len < 1e-9) return PairFeatures{PairStatus::coincident};
  const double phi1 = n1.dot(d) / len;
  const double phi2 = -n2.dot(d) / len;
  const double a1 = std::abs(phi1);
  const double a2 = std::abs(phi2);
  constexpr double kTie = 1e-9;
  const bool swap = std::abs(a1 - a2) <= kTie ? phi2 > phi1 : a1 < a2;
  if (swap) return pair_features(p2, n2, p1, n1);
  return pair_features(p1, n1, p2, n2);
}

/// Uniform bin of `value` over [lo, hi]; values on an interior edge go to the
/// upper bin and `hi` lands in the last bin.
inline std::size_t feature_bin(double value, double lo, double hi, std::size_t bins) {
  const double t = (value - lo) / (hi - lo) * static_cast<double>(bins);
  if (!(t > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(std::floor(t)), bins - 1);
}

inline std::size_t theta_bin(double theta, std::size_t bins) {
  // atan2 can return -pi for a negative zero; the interval is (-pi, pi].
  if (theta <= -std::numbers::pi) theta = std::numbers::pi;
  return feature_bin(theta, -std::numbers::pi, std::numbers::pi, bins);
}

namespace fpfh_detail {

inline void normalize_subhistograms(std::vector<double>& h, std::size_t bins) {
  for (std::size_t s = 0; s < 3; ++s) {
    double sum = 0.0;
    for (std::size_t b = 0; b < bins; ++b) sum += h[s * bins + b];
    if (sum > 0.0) {
      const double scale = 100.0 / sum;
      for (std::size_t b = 0; b < bins; ++b) h[s * bins + b] *= scale;
    }
  }
}

}  // namespace fpfh_detail

/// Simplified point feature histogram of one point against its neighbors
/// within feature_radius. Neighbors lacking a normal, coincident neighbors and
/// degenerate frames are skipped.
inline FpfhDescriptor compute_spfh(const PointCloud& cloud, const SpatialIndex& index,
                                   std::size_t center_idx, const FpfhParams& params) {
  if (center_idx >= cloud.size()) throw Error(Errc::invalid_argument, "center index out of range");
  if (!cloud.has_valid_normal(center_idx))
    throw Error(Errc::invalid_argument, "SPFH center lacks a valid normal");
  const std::size_t bins = params.bins_per_feature;
  FpfhDescriptor out;
  out.histogram.assign(3 * bins, 0.0);

  std::vector<std::size_t> hits;
  index.radius_indices(cloud.points[center_idx], params.feature_radius, hits);
  std::sort(hits.begin(), hits.end());
  const Point3& pc = cloud.points[center_idx];
  const Vector3& nc = cloud.normals[center_idx];
  std::size_t used = 0;
  for (auto j : hits) {
    if (j == center_idx || !cloud.has_valid_normal(j)) continue;
    const auto f = oriented_pair_features(pc, nc, cloud.points[j], cloud.normals[j]);
    if (!f.ok()) continue;
    out.histogram[feature_bin(f.alpha, -1.0, 1.0, bins)] += 1.0;
    out.histogram[bins + feature_bin(f.phi, -1.0, 1.0, bins)] += 1.0;
    out.histogram[2 * bins + theta_bin(f.theta, bins)] += 1.0;
    ++used;
  }
  if (used == 0)
    throw Error(Errc::isolated_keypoint, "point " + std::to_string(center_idx) + " has no usable neighbor");
  fpfh_detail::normalize_subhistograms(out.histogram, bins);
  return out;
}

struct FpfhResult {
  KeypointSet keypoints;  // the keypoints that received a descriptor
  std::vector<FpfhDescriptor> descriptors;
  std::size_t dropped = 0;
};

/// FPFH(p) = SPFH(p) + (1/k) sum_i SPFH(p_i) / |p - p_i| over the k in-radius
/// neighbors of p (duplicates at zero distance skipped), renormalized per
/// sub-histogram. Neighbor SPFHs use the whole cloud. Keypoints without a
/// usable neighborhood are dropped and counted.
inline FpfhResult compute_fpfh(const PointCloud& cloud, const SpatialIndex& index,
                               const KeypointSet& keypoints, const FpfhParams& params) {
  params.validate();
  if (!cloud.has_normals()) throw Error(Errc::invalid_argument, "FPFH needs normals");
  const std::size_t dim = params.dimension();

  std::vector<std::optional<FpfhDescriptor>> spfh_cache(cloud.size());
  std::vector<char> computed(cloud.size(), 0);
  auto spfh = [&](std::size_t i) -> const std::optional<FpfhDescriptor>& {
    if (!computed[i]) {
      computed[i] = 1;
      if (cloud.has_valid_normal(i)) {
        try {
          spfh_cache[i] = compute_spfh(cloud, index, i, params);
        } catch (const Error& e) {
          if (e.code() != Errc::isolated_keypoint) throw;
        }
      }
    }
    return spfh_cache[i];
  };

  FpfhResult result;
  std::vector<std::size_t> kept;
  std::vector<std::size_t> hits;
  for (std::size_t k = 0; k < keypoints.size(); ++k) {
    const std::size_t p = keypoints.indices[k];
    const auto& own = spfh(p);
    if (!own) {
      ++result.dropped;
      continue;
    }
    index.radius_indices(cloud.points[p], params.feature_radius, hits);
    std::sort(hits.begin(), hits.end());
    std::vector<double> acc(dim, 0.0);
    std::size_t count = 0;
    for (auto j : hits) {
      if (j == p) continue;
      const double dist = (cloud.points[j] - cloud.points[p]).norm();
      if (dist == 0.0) continue;
      const auto& other = spfh(j);
      if (!other) continue;
      const double w = 1.0 / dist;
      for (std::size_t b = 0; b < dim; ++b) acc[b] += w * other->histogram[b];
      ++count;
    }
    FpfhDescriptor d;
    d.histogram = own->histogram;
    if (count > 0) {
      const double inv_k = 1.0 / static_cast<double>(count);
      for (std::size_t b = 0; b < dim; ++b) d.histogram[b] += inv_k * acc[b];
    }
    fpfh_detail::normalize_subhistograms(d.histogram, params.bins_per_feature);
    result.descriptors.push_back(std::move(d));
    kept.push_back(k);
  }
  result.keypoints = keypoints.select(kept);
  return result;
}

}  // namespace issauth
