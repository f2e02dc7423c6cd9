#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "issauth/config.hpp"
#include "issauth/error.hpp"
#include "issauth/geometry.hpp"
#include "issauth/pipeline.hpp"
#include "issauth/ply.hpp"
#include "issauth/rng.hpp"

namespace issauth {

// ---------------------------------------------------------------------------
// Synthetic rooms

struct BoxPrimitive {
  Point3 base_center;  // center of the bottom face
  Vector3 size;        // extents along local x, y and height
  double yaw = 0.0;    // radians about +z
};

struct CylinderPrimitive {
  Point3 base_center;
  double radius = 0.3;
  double height = 0.8;
};

/// Two boxes sharing a corner block.
struct LShapePrimitive {
  Point3 base_center;  // corner of the L
  double long_arm = 1.6;
  double short_arm = 1.0;
  double depth = 0.6;
  double height = 0.8;
  double yaw = 0.0;

  std::array<BoxPrimitive, 2> boxes() const {
    const Matrix3 r = Eigen::AngleAxisd(yaw, Vector3::UnitZ()).toRotationMatrix();
    BoxPrimitive a{base_center + r * Vector3(long_arm / 2.0 - depth / 2.0, 0.0, 0.0),
                   Vector3(long_arm, depth, height), yaw};
    BoxPrimitive b{base_center + r * Vector3(0.0, short_arm / 2.0 + depth / 2.0, 0.0),
                   Vector3(depth, short_arm, height), yaw};
    return {a, b};
  }
};

struct RoomSpec {
  std::uint64_t seed = 1;                 // sampling, noise and crop randomness
  Vector3 extents = Vector3(4.0, 3.0, 2.5);
  double density = 400.0;                 // points per square meter
  std::vector<BoxPrimitive> boxes;
  std::vector<CylinderPrimitive> cylinders;
  std::vector<LShapePrimitive> lshapes;
  double noise_sigma = 0.0;
  double crop_fraction = 0.0;

  void validate() const {
    if (!(extents.minCoeff() > 0.0) || !extents.allFinite())
      throw Error(Errc::degenerate_geometry, "room extents must be positive");
    if (!(density > 0.0)) throw Error(Errc::invalid_argument, "density must be positive");
    if (!(noise_sigma >= 0.0)) throw Error(Errc::invalid_argument, "noise_sigma must be >= 0");
    if (!(crop_fraction >= 0.0 && crop_fraction < 1.0))
      throw Error(Errc::invalid_argument, "crop_fraction must lie in [0, 1)");
  }

  /// Area that generate_room samples: six shell faces, box tops and sides,
  /// cylinder tops and mantles.
  double sampled_area() const {
    const Vector3& e = extents;
    double area = 2.0 * (e.x() * e.y() + e.x() * e.z() + e.y() * e.z());
    auto box_area = [](const BoxPrimitive& b) {
      return b.size.x() * b.size.y() + 2.0 * (b.size.x() + b.size.y()) * b.size.z();
    };
    for (const auto& b : boxes) area += box_area(b);
    for (const auto& l : lshapes)
      for (const auto& b : l.boxes()) area += box_area(b);
    for (const auto& c : cylinders)
      area += std::numbers::pi * c.radius * c.radius + 2.0 * std::numbers::pi * c.radius * c.height;
    return area;
  }
};

namespace eval_detail {

inline std::size_t sample_count(double area, double density) {
  return static_cast<std::size_t>(std::llround(area * density));
}

// Uniform samples on the rectangle origin + s*u + t*v, s,t in [0,1].
inline void sample_rect(std::vector<Point3>& out, Rng& rng, const Point3& origin, const Vector3& u,
                        const Vector3& v, double density) {
  const std::size_t n = sample_count(u.norm() * v.norm(), density);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = rng.uniform();
    const double t = rng.uniform();
    out.push_back(origin + s * u + t * v);
  }
}

inline void sample_box(std::vector<Point3>& out, Rng& rng, const BoxPrimitive& b, double density) {
  const Matrix3 r = Eigen::AngleAxisd(b.yaw, Vector3::UnitZ()).toRotationMatrix();
  const Vector3 ex = r * Vector3(b.size.x(), 0, 0);
  const Vector3 ey = r * Vector3(0, b.size.y(), 0);
  const Vector3 ez(0, 0, b.size.z());
  const Point3 c0 = b.base_center - ex / 2.0 - ey / 2.0;  // bottom corner
  sample_rect(out, rng, c0 + ez, ex, ey, density);       // top
  sample_rect(out, rng, c0, ex, ez, density);            // -y side
  sample_rect(out, rng, c0 + ey, ex, ez, density);       // +y side
  sample_rect(out, rng, c0, ey, ez, density);            // -x side
  sample_rect(out, rng, c0 + ex, ey, ez, density);       // +x side
}

inline void sample_cylinder(std::vector<Point3>& out, Rng& rng, const CylinderPrimitive& c,
                            double density) {
  const double two_pi = 2.0 * std::numbers::pi;
  const std::size_t mantle = sample_count(two_pi * c.radius * c.height, density);
  for (std::size_t i = 0; i < mantle; ++i) {
    const double a = rng.uniform(0.0, two_pi);
    out.push_back(c.base_center + Vector3(c.radius * std::cos(a), c.radius * std::sin(a), rng.uniform() * c.height));
  }
  const std::size_t top = sample_count(std::numbers::pi * c.radius * c.radius, density);
  for (std::size_t i = 0; i < top; ++i) {
    const double a = rng.uniform(0.0, two_pi);
    const double rr = c.radius * std::sqrt(rng.uniform());
    out.push_back(c.base_center + Vector3(rr * std::cos(a), rr * std::sin(a), c.height));
  }
}

/// Drops the `fraction` of points lying farthest along a random direction.
inline PointCloud crop_along_direction(const PointCloud& cloud, double fraction, Rng& rng) {
  if (fraction <= 0.0 || cloud.empty()) return cloud;
  const Vector3 dir = rng.unit_vector();
  const std::size_t n = cloud.size();
  const auto keep = static_cast<std::size_t>(std::ceil((1.0 - fraction) * static_cast<double>(n) - 1e-9));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<double> proj(n);
  for (std::size_t i = 0; i < n; ++i) proj[i] = dir.dot(cloud.points[i]);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return proj[a] < proj[b]; });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return cloud.select(order);
}

}  // namespace eval_detail

/// Samples the room shell (floor, ceiling, four walls) and the furniture
/// surfaces at the requested density, then applies noise and cropping.
/// Deterministic in `spec.seed`.
inline PointCloud generate_room(const RoomSpec& spec) {
  using namespace eval_detail;
  spec.validate();
  Rng rng(spec.seed);
  PointCloud cloud;
  auto& pts = cloud.points;
  const Vector3& e = spec.extents;
  const Vector3 ux(e.x(), 0, 0), uy(0, e.y(), 0), uz(0, 0, e.z());
  pts.reserve(sample_count(spec.sampled_area(), spec.density) + 64);
  sample_rect(pts, rng, Point3::Zero(), ux, uy, spec.density);  // floor
  sample_rect(pts, rng, uz, ux, uy, spec.density);              // ceiling
  sample_rect(pts, rng, Point3::Zero(), ux, uz, spec.density);  // wall y = 0
  sample_rect(pts, rng, uy, ux, uz, spec.density);              // wall y = Y
  sample_rect(pts, rng, Point3::Zero(), uy, uz, spec.density);  // wall x = 0
  sample_rect(pts, rng, ux, uy, uz, spec.density);              // wall x = X
  for (const auto& b : spec.boxes) sample_box(pts, rng, b, spec.density);
  for (const auto& l : spec.lshapes)
    for (const auto& b : l.boxes()) sample_box(pts, rng, b, spec.density);
  for (const auto& c : spec.cylinders) sample_cylinder(pts, rng, c, spec.density);
  if (spec.noise_sigma > 0.0) {
    for (auto& p : pts) p += spec.noise_sigma * Vector3(rng.normal(), rng.normal(), rng.normal());
  }
  return crop_along_direction(cloud, spec.crop_fraction, rng);
}

/// A furnished room layout drawn from `layout_seed`. Extents, furniture
/// count, type, size and pose all vary with the seed.
inline RoomSpec random_room_spec(std::uint64_t layout_seed, double density = 1000.0, double noise_sigma = 0.003) {
  Rng rng(layout_seed ^ 0x9e3779b97f4a7c15ULL);
  RoomSpec spec;
  spec.seed = layout_seed;
  spec.density = density;
  spec.noise_sigma = noise_sigma;
  spec.extents = Vector3(rng.uniform(3.5, 6.0), rng.uniform(3.0, 5.0), rng.uniform(2.4, 2.9));
  const int pieces = 5 + static_cast<int>(rng.index(5));
  auto floor_spot = [&](double margin) {
    return Point3(rng.uniform(margin, spec.extents.x() - margin), rng.uniform(margin, spec.extents.y() - margin), 0.0);
  };
  for (int i = 0; i < pieces; ++i) {
    const double kind = rng.uniform();
    const double yaw = rng.uniform(0.0, std::numbers::pi);
    if (kind < 0.55) {
      BoxPrimitive b{floor_spot(0.8), Vector3(rng.uniform(0.4, 1.6), rng.uniform(0.4, 1.2), rng.uniform(0.4, 1.9)), yaw};
      spec.boxes.push_back(b);
      if (rng.uniform() < 0.4) {
        // Something standing on top of it.
        BoxPrimitive top{b.base_center + Vector3(0, 0, b.size.z()),
                         Vector3(rng.uniform(0.2, 0.4), rng.uniform(0.2, 0.4), rng.uniform(0.2, 0.5)),
                         yaw + rng.uniform(0.0, 1.0)};
        spec.boxes.push_back(top);
      }
    } else if (kind < 0.8) {
      spec.cylinders.push_back({floor_spot(0.6), rng.uniform(0.15, 0.4), rng.uniform(0.4, 1.2)});
    } else {
      spec.lshapes.push_back({floor_spot(1.0), rng.uniform(1.2, 2.0), rng.uniform(0.8, 1.4),
                              rng.uniform(0.5, 0.8), rng.uniform(0.4, 0.9), yaw});
    }
  }
  // Cabinets, shelves and frames hung on the walls.
  const int hung = 2 + static_cast<int>(rng.index(4));
  for (int i = 0; i < hung; ++i) {
    const int wall = static_cast<int>(rng.index(4));
    const double width = rng.uniform(0.4, 1.4);
    const double depth = rng.uniform(0.15, 0.4);
    const double height = rng.uniform(0.3, 0.8);
    const double z = rng.uniform(0.9, spec.extents.z() - height - 0.1);
    const double along_x = rng.uniform(width, spec.extents.x() - width);
    const double along_y = rng.uniform(width, spec.extents.y() - width);
    const double half_pi = std::numbers::pi / 2.0;
    switch (wall) {
      case 0: spec.boxes.push_back({Point3(along_x, depth / 2.0, z), Vector3(width, depth, height), 0.0}); break;
      case 1: spec.boxes.push_back({Point3(along_x, spec.extents.y() - depth / 2.0, z), Vector3(width, depth, height), 0.0}); break;
      case 2: spec.boxes.push_back({Point3(depth / 2.0, along_y, z), Vector3(width, depth, height), half_pi}); break;
      default: spec.boxes.push_back({Point3(spec.extents.x() - depth / 2.0, along_y, z), Vector3(width, depth, height), half_pi}); break;
    }
  }
  return spec;
}

/// Moves, jitters and partially crops a scan. Keeps ceil((1 - crop) * n) points.
inline PointCloud perturb_scan(const PointCloud& cloud, const RigidTransform& transform, double noise_sigma,
                               double crop_fraction, std::uint64_t seed) {
  if (!(crop_fraction >= 0.0 && crop_fraction < 1.0))
    throw Error(Errc::invalid_argument, "crop_fraction must lie in [0, 1)");
  if (!(noise_sigma >= 0.0)) throw Error(Errc::invalid_argument, "noise_sigma must be >= 0");
  Rng rng(seed);
  PointCloud out = apply_transform(cloud, transform);
  if (noise_sigma > 0.0) {
    for (auto& p : out.points) p += noise_sigma * Vector3(rng.normal(), rng.normal(), rng.normal());
  }
  return eval_detail::crop_along_direction(out, crop_fraction, rng);
}

// ---------------------------------------------------------------------------
// Error rates

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/// FRR(t) = share of genuine scores below t, FAR(t) = share of impostor scores
/// at or above t. Candidate thresholds are the distinct scores plus +inf; the
/// one minimizing |FRR - FAR| wins (lowest on ties) and EER is the mean of the
/// two rates there.
inline EerResult compute_eer(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty()) throw Error(Errc::invalid_argument, "empty score list");
  std::vector<double> g(genuine.begin(), genuine.end()), im(impostor.begin(), impostor.end());
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  std::vector<double> thresholds;
  thresholds.reserve(g.size() + im.size() + 1);
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  const double ng = static_cast<double>(g.size()), ni = static_cast<double>(im.size());
  EerResult best;
  double best_gap = std::numeric_limits<double>::infinity();
  std::size_t gi = 0, ii = 0;  // counts of scores strictly below the threshold
  for (double t : thresholds) {
    while (gi < g.size() && g[gi] < t) ++gi;
    while (ii < im.size() && im[ii] < t) ++ii;
    const double frr = static_cast<double>(gi) / ng;
    const double far = static_cast<double>(im.size() - ii) / ni;
    const double gap = std::abs(frr - far);
    if (gap < best_gap) {
      best_gap = gap;
      best.eer = (frr + far) / 2.0;
      best.threshold = t;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Pair evaluation

struct ScenePair {
  PointCloud template_scan;
  PointCloud probe_scan;
  bool is_genuine = false;
  std::string label;
};

struct PairRecord {
  std::string label;
  bool is_genuine = false;
  double similarity = 0.0;
  bool accepted = false;
  double elapsed_seconds = 0.0;
  double reduction = 0.0;
  std::size_t template_raw = 0, probe_raw = 0;
  std::size_t template_downsampled = 0, probe_downsampled = 0;
  std::size_t template_keypoints = 0, probe_keypoints = 0;
  std::size_t correspondences = 0;
  std::size_t matched_count = 0;
  RegistrationResult registration;
  std::string diagnostic;

  /// Template keypoints over preprocessed template points.
  double keypoint_fraction() const {
    return template_downsampled ? static_cast<double>(template_keypoints) / static_cast<double>(template_downsampled) : 0.0;
  }
  double keypoint_fraction_raw() const {
    return template_raw ? static_cast<double>(template_keypoints) / static_cast<double>(template_raw) : 0.0;
  }
};

struct EvalReport {
  Profile mode = Profile::kp2;
  std::vector<PairRecord> records;
  double eer = 0.0;
  double eer_threshold = 0.0;
  double accuracy_at_eer = 1.0;
  double mean_time = 0.0;
  double mean_reduction = 0.0;
  double mean_keypoint_fraction = 0.0;
  double mean_keypoint_fraction_raw = 0.0;

  std::size_t genuine_count() const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto& r) { return r.is_genuine; }));
  }
  std::size_t impostor_count() const { return records.size() - genuine_count(); }
};

/// Produces pair `i` on demand so large sets never sit in memory at once.
struct PairSource {
  std::size_t count = 0;
  std::function<ScenePair(std::size_t)> make;
  std::function<bool(std::size_t)> is_genuine;
};

struct EvalOptions {
  unsigned threads = 1;
};

/// Enrolls the template scan and verifies the probe, timing both halves.
/// Failures become rejections with similarity 0.
inline PairRecord evaluate_pair(const ScenePair& pair, const PipelineConfig& config) {
  PairRecord rec;
  rec.label = pair.label;
  rec.is_genuine = pair.is_genuine;
  rec.template_raw = pair.template_scan.size();
  rec.probe_raw = pair.probe_scan.size();
  const auto start = std::chrono::steady_clock::now();
  try {
    const ProcessedScan tmpl_scan = process_scan(pair.template_scan, config);
    rec.template_downsampled = tmpl_scan.cloud.size();
    rec.template_keypoints = tmpl_scan.keypoints.size();
    const Template tmpl = make_template(tmpl_scan, config, 0);
    try {
      const ProcessedScan probe = process_scan(pair.probe_scan, config);
      rec.probe_downsampled = probe.cloud.size();
      rec.probe_keypoints = probe.keypoints.size();
      const AuthDecision d = verify_processed(tmpl, probe, config);
      rec.similarity = d.similarity;
      rec.accepted = d.accepted;
      rec.correspondences = d.correspondences;
      rec.matched_count = d.matched_count;
      rec.registration = d.registration;
      rec.diagnostic = d.diagnostic;
    } catch (const Error& e) {
      rec.diagnostic = std::string("probe rejected: ") + e.what();
    }
  } catch (const Error& e) {
    rec.diagnostic = std::string("enrollment failed: ") + e.what();
  }
  rec.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::size_t raw = rec.template_raw + rec.probe_raw;
  if (config.profile == Profile::dense || raw == 0) {
    rec.reduction = 0.0;  // the dense baseline ships the full capture
  } else {
    rec.reduction = data_reduction_rate(raw, rec.template_keypoints + rec.probe_keypoints);
  }
  return rec;
}

inline EvalReport summarize(Profile mode, std::vector<PairRecord> records) {
  EvalReport report;
  report.mode = mode;
  report.records = std::move(records);
  std::vector<double> genuine, impostor;
  double time = 0.0, reduction = 0.0, frac = 0.0, frac_raw = 0.0;
  for (const auto& r : report.records) {
    (r.is_genuine ? genuine : impostor).push_back(r.similarity);
    time += r.elapsed_seconds;
    reduction += r.reduction;
    frac += r.keypoint_fraction();
    frac_raw += r.keypoint_fraction_raw();
  }
  const double n = static_cast<double>(report.records.size());
  if (!genuine.empty() && !impostor.empty()) {
    const auto eer = compute_eer(genuine, impostor);
    report.eer = eer.eer;
    report.eer_threshold = eer.threshold;
  }
  report.accuracy_at_eer = 1.0 - report.eer;
  if (n > 0) {
    report.mean_time = time / n;
    report.mean_reduction = reduction / n;
    report.mean_keypoint_fraction = frac / n;
    report.mean_keypoint_fraction_raw = frac_raw / n;
  }
  return report;
}

/// Runs every pair (in parallel when options.threads > 1); records come back
/// in pair order regardless of scheduling.
inline EvalReport evaluate_pairs(const PairSource& source, const PipelineConfig& config,
                                 const EvalOptions& options = {}) {
  config.validate();
  std::size_t genuine = 0;
  for (std::size_t i = 0; i < source.count; ++i) genuine += source.is_genuine(i) ? 1 : 0;
  if (genuine < 2 || source.count - genuine < 2)
    throw Error(Errc::insufficient_pairs, "need at least 2 genuine and 2 impostor pairs");

  std::vector<PairRecord> records(source.count);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(source.count);
  auto worker = [&] {
    for (std::size_t i = next++; i < source.count; i = next++) {
      try {
        records[i] = evaluate_pair(source.make(i), config);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(source.count)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  // Loading failures (unreadable PLY and the like) surface from the first failing pair.
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return summarize(config.profile, std::move(records));
}

inline EvalReport evaluate_pairs(std::span<const ScenePair> pairs, const PipelineConfig& config,
                                 const EvalOptions& options = {}) {
  PairSource source;
  source.count = pairs.size();
  source.make = [pairs](std::size_t i) { return pairs[i]; };
  source.is_genuine = [pairs](std::size_t i) { return pairs[i].is_genuine; };
  return evaluate_pairs(source, config, options);
}

// ---------------------------------------------------------------------------
// Synthetic pair sets

struct SyntheticOptions {
  std::uint64_t seed = 2024;
  double density = 1000.0;
  double room_noise = 0.003;        // sensor noise in every scan
  double max_angle = std::numbers::pi / 6.0;
  double max_translation = 2.0;
  double probe_noise = 0.01;
  double probe_crop = 0.3;
  bool rescan_genuine = false;      // resample the surfaces for genuine probes
};

/// Pair i < genuine_count perturbs the enrolled scan of room i (or a fresh
/// rescan of it with rescan_genuine); the rest pair two different rooms.
/// Every pair is a pure function of (options, i).
inline PairSource synthetic_pairs(std::size_t genuine_count, std::size_t impostor_count,
                                  const SyntheticOptions& opt = {}) {
  PairSource src;
  src.count = genuine_count + impostor_count;
  src.is_genuine = [genuine_count](std::size_t i) { return i < genuine_count; };
  src.make = [genuine_count, opt](std::size_t i) {
    const std::uint64_t base = opt.seed * 1'000'003ULL + 7919ULL * i;
    const bool genuine = i < genuine_count;
    RoomSpec enrolled = random_room_spec(base + 1, opt.density, opt.room_noise);
    RoomSpec probed = genuine ? enrolled : random_room_spec(base + 2, opt.density, opt.room_noise);
    if (!genuine || opt.rescan_genuine) probed.seed = base + 3;
    Rng rng(base + 4);
    const RigidTransform motion = rng.rigid_transform(opt.max_angle, opt.max_translation);
    ScenePair pair;
    pair.is_genuine = genuine;
    pair.label = (genuine ? "genuine_" : "impostor_") + std::to_string(i);
    pair.template_scan = generate_room(enrolled);
    const PointCloud captured = probed.seed == enrolled.seed ? pair.template_scan : generate_room(probed);
    pair.probe_scan = perturb_scan(captured, motion, opt.probe_noise, opt.probe_crop, base + 5);
    return pair;
  };
  return src;
}

// ---------------------------------------------------------------------------
// CSV

namespace eval_detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(Errc::io_error, "write failed for " + path.string());
}

}  // namespace eval_detail

/// label,is_genuine,similarity with round-trip precision.
inline std::string score_distribution_csv(const EvalReport& report) {
  using namespace eval_detail;
  std::string out = "label,is_genuine,similarity\n";
  for (const auto& r : report.records)
    out += csv_field(r.label) + "," + (r.is_genuine ? "1" : "0") + "," + shortest(r.similarity) + "\n";
  return out;
}

inline void score_distribution_export(const EvalReport& report, const std::filesystem::path& path) {
  if (report.records.empty()) throw Error(Errc::invalid_argument, "empty report");
  eval_detail::write_file(path, score_distribution_csv(report));
}

/// Full per-pair report including timing and registration diagnostics.
inline std::string report_csv(const EvalReport& report) {
  using namespace eval_detail;
  std::string out =
      "label,is_genuine,similarity,accepted,elapsed_seconds,reduction,template_raw,probe_raw,"
      "template_downsampled,probe_downsampled,template_keypoints,probe_keypoints,correspondences,"
      "matched,inliers,fitness,rmse,diagnostic\n";
  for (const auto& r : report.records) {
    out += csv_field(r.label) + "," + (r.is_genuine ? "1" : "0") + "," + shortest(r.similarity) + "," +
           (r.accepted ? "1" : "0") + "," + shortest(r.elapsed_seconds) + "," + shortest(r.reduction) + "," +
           std::to_string(r.template_raw) + "," + std::to_string(r.probe_raw) + "," +
           std::to_string(r.template_downsampled) + "," + std::to_string(r.probe_downsampled) + "," +
           std::to_string(r.template_keypoints) + "," + std::to_string(r.probe_keypoints) + "," +
           std::to_string(r.correspondences) + "," + std::to_string(r.matched_count) + "," +
           std::to_string(r.registration.inlier_count) + "," + shortest(r.registration.fitness) + "," +
           shortest(r.registration.rmse) + "," + csv_field(r.diagnostic) + "\n";
  }
  return out;
}

inline void report_csv_export(const EvalReport& report, const std::filesystem::path& path) {
  eval_detail::write_file(path, report_csv(report));
}

struct ScoreRow {
  std::string label;
  bool is_genuine = false;
  double similarity = 0.0;
};

inline std::vector<ScoreRow> parse_score_csv(std::istream& in) {
  using namespace eval_detail;
  std::vector<ScoreRow> rows;
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::manifest_error, "missing header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw Error(Errc::manifest_error, "bad score row '" + line + "'");
    rows.push_back({f[0], f[1] == "1", std::stod(f[2])});
  }
  return rows;
}

/// Aligned text table with Accuracy (1 - EER), Time and Data reduction rate.
inline std::string summary_table(std::span<const EvalReport> reports) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "Method" << std::right << std::setw(10) << "Accuracy" << std::setw(10)
     << "EER" << std::setw(10) << "Time (s)" << std::setw(22) << "Data reduction rate" << std::setw(12)
     << "Keypoints" << "\n";
  for (const auto& r : reports) {
    os << std::left << std::setw(10) << profile_name(r.mode) << std::right << std::fixed << std::setprecision(1)
       << std::setw(9) << 100.0 * r.accuracy_at_eer << "%" << std::setprecision(3) << std::setw(10) << r.eer
       << std::setprecision(2) << std::setw(10) << r.mean_time << std::setprecision(1) << std::setw(21)
       << 100.0 * r.mean_reduction << "%" << std::setprecision(2) << std::setw(11)
       << 100.0 * r.mean_keypoint_fraction << "%\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Manifests

struct ManifestEntry {
  std::filesystem::path template_path;
  std::filesystem::path probe_path;
  bool is_genuine = false;
  std::string label;
};

/// CSV with header template_path,probe_path,is_genuine,label. Relative paths
/// resolve against `base_dir`.
inline std::vector<ManifestEntry> parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {}) {
  using namespace eval_detail;
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::manifest_error, "empty manifest");
  const auto header = split_csv_line(line);
  if (header != std::vector<std::string>{"template_path", "probe_path", "is_genuine", "label"})
    throw Error(Errc::manifest_error, "expected header template_path,probe_path,is_genuine,label");
  std::vector<ManifestEntry> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw Error(Errc::manifest_error, "line " + std::to_string(line_no) + ": expected 4 fields");
    ManifestEntry e;
    e.template_path = f[0];
    e.probe_path = f[1];
    if (e.template_path.is_relative()) e.template_path = base_dir / e.template_path;
    if (e.probe_path.is_relative()) e.probe_path = base_dir / e.probe_path;
    if (f[2] == "1" || f[2] == "true") e.is_genuine = true;
    else if (f[2] == "0" || f[2] == "false") e.is_genuine = false;
    else throw Error(Errc::manifest_error, "line " + std::to_string(line_no) + ": is_genuine must be 0/1/true/false");
    e.label = f[3];
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw Error(Errc::manifest_error, "no pairs listed");
  return entries;
}

inline std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  return parse_manifest(in, path.parent_path());
}

/// Loads PLY files lazily as pairs are evaluated; file I/O is outside timing.
inline PairSource manifest_pairs(std::vector<ManifestEntry> entries) {
  PairSource src;
  src.count = entries.size();
  src.is_genuine = [entries](std::size_t i) { return entries[i].is_genuine; };
  src.make = [entries](std::size_t i) {
    ScenePair p;
    p.template_scan = load_ply(entries[i].template_path);
    p.probe_scan = load_ply(entries[i].probe_path);
    p.is_genuine = entries[i].is_genuine;
    p.label = entries[i].label;
    return p;
  };
  return src;
}

}  // namespace issauth
