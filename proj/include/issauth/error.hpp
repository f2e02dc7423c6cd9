#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace issauth {

enum class Errc {
  invalid_argument,
  io_error,
  ply_malformed_header,
  ply_non_finite,
  ply_unsupported_format,
  ply_truncated,
  ply_malformed_body,
  degenerate_geometry,
  insufficient_structure,
  isolated_keypoint,
  too_few_keypoints,
  invalid_template,
  fingerprint_mismatch,
  template_bad_magic,
  template_unsupported_version,
  template_truncated,
  template_checksum_mismatch,
  template_malformed,
  insufficient_pairs,
  manifest_error,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::io_error: return "i/o error";
    case Errc::ply_malformed_header: return "malformed PLY header";
    case Errc::ply_non_finite: return "non-finite PLY coordinate";
    case Errc::ply_unsupported_format: return "unsupported PLY format";
    case Errc::ply_truncated: return "truncated PLY body";
    case Errc::ply_malformed_body: return "malformed PLY body";
    case Errc::degenerate_geometry: return "degenerate geometry";
    case Errc::insufficient_structure: return "insufficient structure";
    case Errc::isolated_keypoint: return "isolated keypoint";
    case Errc::too_few_keypoints: return "enrollment failed: too few keypoints";
    case Errc::invalid_template: return "invalid template";
    case Errc::fingerprint_mismatch: return "parameter fingerprint mismatch";
    case Errc::template_bad_magic: return "bad template magic";
    case Errc::template_unsupported_version: return "unsupported template version";
    case Errc::template_truncated: return "truncated template";
    case Errc::template_checksum_mismatch: return "template checksum mismatch";
    case Errc::template_malformed: return "malformed template";
    case Errc::insufficient_pairs: return "insufficient pairs";
    case Errc::manifest_error: return "manifest error";
  }
  return "unknown error";
}

/// Library-wide exception. `code()` distinguishes failure classes; the message
/// carries context for humans.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) +
                           (detail.empty() ? "" : ": " + detail)),
        code_(code) {}
  explicit Error(Errc code) : Error(code, "") {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace issauth
