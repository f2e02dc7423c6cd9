#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "issauth/config.hpp"
#include "issauth/error.hpp"
#include "issauth/fpfh.hpp"
#include "issauth/geometry.hpp"
#include "issauth/iss.hpp"
#include "issauth/kdtree.hpp"
#include "issauth/preprocess.hpp"
#include "issauth/registration.hpp"
#include "issauth/template.hpp"

namespace issauth {

/// Fewest keypoints an enrollment (or probe) may carry.
inline constexpr std::size_t kMinTemplateKeypoints = 10;

/// Device-side result of processing one scan.
struct ProcessedScan {
  PointCloud cloud;  // preprocessed
  KeypointSet keypoints;
  std::vector<FpfhDescriptor> descriptors;  // float32-rounded, aligned with keypoints
  std::size_t raw_point_count = 0;
  std::size_t dropped_keypoints = 0;
};

/// Preprocess, select keypoints (all points in dense mode), describe them.
inline ProcessedScan process_scan(const PointCloud& raw, const PipelineConfig& config) {
  config.validate();
  if (raw.empty()) throw Error(Errc::insufficient_structure, "empty scan");
  ProcessedScan out;
  out.raw_point_count = raw.size();
  out.cloud = preprocess(raw, config.preprocess);
  const SpatialIndex index(out.cloud);
  const KeypointSet candidates = config.profile == Profile::dense
                                     ? KeypointSet::all_points(out.cloud)
                                     : extract_iss_keypoints(out.cloud, config.iss, index);
  FpfhResult f = compute_fpfh(out.cloud, index, candidates, config.fpfh);
  out.keypoints = std::move(f.keypoints);
  out.descriptors = std::move(f.descriptors);
  out.dropped_keypoints = f.dropped;
  quantize_descriptors(out.descriptors);
  if (out.keypoints.size() < kMinTemplateKeypoints)
    throw Error(Errc::too_few_keypoints, std::to_string(out.keypoints.size()) + " keypoints");
  return out;
}

inline std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

inline Template make_template(const ProcessedScan& scan, const PipelineConfig& config,
                              std::optional<std::int64_t> created_at = std::nullopt) {
  Template t;
  t.keypoint_positions = scan.keypoints.positions;
  t.descriptors = scan.descriptors;
  t.params_fingerprint = config.fingerprint();
  t.raw_point_count = scan.raw_point_count;
  t.created_at = created_at.value_or(unix_now());
  return t;
}

/// `created_at` defaults to the current time.
inline Template enroll(const PointCloud& raw_scan, const PipelineConfig& config,
                       std::optional<std::int64_t> created_at = std::nullopt) {
  return make_template(process_scan(raw_scan, config), config, created_at);
}

struct SimilarityResult {
  double similarity = 0.0;
  std::size_t matched_count = 0;
};

/// Fraction of template keypoints whose nearest transformed probe keypoint
/// lies within match_distance. Each template keypoint counts independently.
inline SimilarityResult similarity_score(std::span<const Point3> template_kp,
                                         std::span<const Point3> probe_kp,
                                         const RigidTransform& transform, double match_distance) {
  if (template_kp.empty()) throw Error(Errc::invalid_argument, "empty template keypoint set");
  if (!(match_distance > 0.0)) throw Error(Errc::invalid_argument, "match_distance must be positive");
  SimilarityResult r;
  if (probe_kp.empty()) return r;
  const SpatialIndex index(apply_transform(probe_kp, transform));
  for (const auto& p : template_kp) {
    if (index.nearest(p).distance <= match_distance) ++r.matched_count;
  }
  r.similarity = static_cast<double>(r.matched_count) / static_cast<double>(template_kp.size());
  return r;
}

/// Share of raw points that are not transmitted.
inline double data_reduction_rate(std::uint64_t raw_point_count, std::uint64_t transmitted) {
  if (raw_point_count == 0) throw Error(Errc::invalid_argument, "raw point count is zero");
  if (transmitted > raw_point_count)
    throw Error(Errc::invalid_argument, "more points transmitted than captured");
  return 1.0 - static_cast<double>(transmitted) / static_cast<double>(raw_point_count);
}

struct AuthDecision {
  double similarity = 0.0;
  double threshold = 0.0;
  bool accepted = false;
  RegistrationResult registration;  // coarse RANSAC result refined by ICP
  RegistrationResult coarse;        // RANSAC alone
  std::size_t matched_count = 0;
  std::size_t template_count = 0;
  std::size_t probe_keypoints = 0;
  std::size_t correspondences = 0;
  std::string diagnostic;  // empty on a clean run
};

/// Server-side half of verification, given an already processed probe.
inline AuthDecision verify_processed(const Template& tmpl, const ProcessedScan& probe,
                                     const PipelineConfig& config) {
  AuthDecision d;
  d.threshold = config.similarity.decision_threshold;
  d.template_count = tmpl.size();
  d.probe_keypoints = probe.keypoints.size();

  const auto corr = match_descriptors(probe.descriptors, tmpl.descriptors);
  d.correspondences = corr.size();
  if (corr.size() < config.ransac.sample_size) {
    d.diagnostic = "registration failed: " + std::to_string(corr.size()) + " descriptor matches";
    return d;
  }
  d.coarse = ransac_register(probe.keypoints.positions, tmpl.keypoint_positions, corr, config.ransac);
  if (!d.coarse.converged) {
    d.registration = d.coarse;
    d.diagnostic = "registration failed: no consistent RANSAC model";
    return d;
  }
  d.registration = icp_refine(probe.keypoints.positions, tmpl.keypoint_positions, d.coarse.transform,
                              config.icp);
  if (!d.registration.converged) {
    d.diagnostic = "registration failed: ICP found no overlap";
    return d;
  }
  const auto s = similarity_score(tmpl.keypoint_positions, probe.keypoints.positions,
                                  d.registration.transform, config.similarity.match_distance);
  d.similarity = s.similarity;
  d.matched_count = s.matched_count;
  d.accepted = d.similarity >= d.threshold;
  return d;
}

inline void check_template(const Template& tmpl, const PipelineConfig& config) {
  if (tmpl.version != Template::kVersion)
    throw Error(Errc::template_unsupported_version, std::to_string(tmpl.version));
  if (tmpl.size() < kMinTemplateKeypoints || tmpl.descriptors.size() != tmpl.size())
    throw Error(Errc::invalid_template, std::to_string(tmpl.size()) + " keypoints");
  if (tmpl.descriptor_dimension() != config.fpfh.dimension())
    throw Error(Errc::invalid_template, "descriptor dimension mismatch");
  if (tmpl.params_fingerprint != config.fingerprint())
    throw Error(Errc::fingerprint_mismatch, "template " + to_hex(tmpl.params_fingerprint) +
                                                " vs config " + to_hex(config.fingerprint()));
}

/// Throws for an incompatible template or configuration. Any failure while
/// processing or registering the probe yields a rejection with similarity 0.
inline AuthDecision verify(const Template& tmpl, const PointCloud& probe_scan,
                           const PipelineConfig& config) {
  config.validate();
  check_template(tmpl, config);
  ProcessedScan probe;
  try {
    probe = process_scan(probe_scan, config);
  } catch (const Error& e) {
    if (e.code() == Errc::invalid_argument) throw;
    AuthDecision d;
    d.threshold = config.similarity.decision_threshold;
    d.template_count = tmpl.size();
    d.diagnostic = std::string("probe rejected: ") + e.what();
    return d;
  }
  return verify_processed(tmpl, probe, config);
}

}  // namespace issauth
