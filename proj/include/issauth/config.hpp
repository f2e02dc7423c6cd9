#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "issauth/error.hpp"
#include "issauth/fpfh.hpp"
#include "issauth/iss.hpp"
#include "issauth/preprocess.hpp"
#include "issauth/registration.hpp"

namespace issauth {

/// dense: every preprocessed point is a keypoint (no ISS selection).
/// kp2 / kp1: ISS with non-maximum radius 0.2 m / 0.3 m.
enum class Profile { dense, kp2, kp1 };

inline std::string_view profile_name(Profile p) {
  switch (p) {
    case Profile::dense: return "dense";
    case Profile::kp2: return "kp2";
    case Profile::kp1: return "kp1";
  }
  return "?";
}

inline std::optional<Profile> parse_profile(std::string_view s) {
  if (s == "dense") return Profile::dense;
  if (s == "kp2") return Profile::kp2;
  if (s == "kp1") return Profile::kp1;
  return std::nullopt;
}

struct SimilarityParams {
  double match_distance = 0.2;
  double decision_threshold = 0.5;

  void validate() const {
    if (!(match_distance > 0.0)) throw Error(Errc::invalid_argument, "match_distance must be positive");
    if (!(decision_threshold >= 0.0 && decision_threshold <= 1.0))
      throw Error(Errc::invalid_argument, "decision_threshold must lie in [0, 1]");
  }
};

using Fingerprint = std::array<std::uint8_t, 32>;

struct PipelineConfig {
  Profile profile = Profile::kp2;
  PreprocessParams preprocess;
  IssParams iss;
  FpfhParams fpfh;
  RansacParams ransac;
  IcpParams icp;
  SimilarityParams similarity;

  static PipelineConfig for_profile(Profile p) {
    PipelineConfig c;
    c.profile = p;
    c.iss.non_max_radius = p == Profile::kp1 ? 0.3 : 0.2;
    return c;
  }

  void validate() const {
    preprocess.validate();
    iss.validate();
    fpfh.validate();
    ransac.validate();
    icp.validate();
    similarity.validate();
  }

  /// Canonical `name=value` lines for every parameter that shapes templates,
  /// registration, or matching. The decision threshold and RNG seed are
  /// verification-time choices and are left out.
  std::string canonical_text() const {
    std::string out;
    auto real = [&](std::string_view name, double v) {
      char buf[64];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
      out.append(name).append("=").append(buf, ptr).append("\n");
    };
    auto count = [&](std::string_view name, std::size_t v) {
      out.append(name).append("=").append(std::to_string(v)).append("\n");
    };
    out.append("profile=").append(profile_name(profile)).append("\n");
    real("voxel_size", preprocess.voxel_size);
    count("normal_neighbors", preprocess.normal_neighbors);
    real("normal_radius", preprocess.normal_radius);
    real("outlier_radius", preprocess.outlier_radius);
    count("outlier_min_neighbors", preprocess.outlier_min_neighbors);
    out.append("normal_orientation=")
        .append(preprocess.orientation == NormalOrientation::positive_z ? "positive_z" : "toward_centroid")
        .append("\n");
    real("salient_radius", iss.salient_radius);
    real("non_max_radius", iss.non_max_radius);
    real("gamma_21", iss.gamma_21);
    real("gamma_32", iss.gamma_32);
    count("iss_min_neighbors", iss.min_neighbors);
    real("feature_radius", fpfh.feature_radius);
    count("bins_per_feature", fpfh.bins_per_feature);
    real("correspondence_distance", ransac.correspondence_distance);
    count("ransac_max_iterations", ransac.max_iterations);
    real("confidence", ransac.confidence);
    count("sample_size", ransac.sample_size);
    real("similarity_edge_ratio", ransac.similarity_edge_ratio);
    count("icp_max_iterations", icp.max_iterations);
    real("icp_distance_threshold", icp.distance_threshold);
    real("convergence_epsilon", icp.convergence_epsilon);
    real("match_distance", similarity.match_distance);
    return out;
  }

  /// SHA-256 of canonical_text().
  Fingerprint fingerprint() const {
    const std::string text = canonical_text();
    Fingerprint fp{};
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), fp.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != fp.size())
      throw Error(Errc::invalid_argument, "SHA-256 digest failed");
    return fp;
  }
};

inline std::string to_hex(const Fingerprint& fp) {
  static const char* kDigits = "0123456789abcdef";
  std::string s;
  for (auto b : fp) {
    s += kDigits[b >> 4];
    s += kDigits[b & 15];
  }
  return s;
}

}  // namespace issauth
