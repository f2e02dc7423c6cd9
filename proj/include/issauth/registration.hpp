#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "issauth/error.hpp"
#include "issauth/fpfh.hpp"
#include "issauth/geometry.hpp"
#include "issauth/kdtree.hpp"
#include "issauth/rng.hpp"

namespace issauth {

struct RansacParams {
  double correspondence_distance = 0.2;
  std::size_t max_iterations = 1'000'000;
  double confidence = 0.999;
  std::size_t sample_size = 3;
  double similarity_edge_ratio = 0.9;
  std::optional<std::uint64_t> rng_seed;

  void validate() const {
    if (!(correspondence_distance > 0.0))
      throw Error(Errc::invalid_argument, "correspondence_distance must be positive");
    if (!(confidence > 0.0 && confidence < 1.0))
      throw Error(Errc::invalid_argument, "confidence must lie in (0, 1)");
    if (sample_size < 3) throw Error(Errc::invalid_argument, "sample_size must be >= 3");
    if (max_iterations < 1) throw Error(Errc::invalid_argument, "max_iterations must be >= 1");
    if (!(similarity_edge_ratio > 0.0 && similarity_edge_ratio <= 1.0))
      throw Error(Errc::invalid_argument, "similarity_edge_ratio must lie in (0, 1]");
  }
};

struct IcpParams {
  std::size_t max_iterations = 50;
  double distance_threshold = 0.2;
  double convergence_epsilon = 1e-6;

  void validate() const {
    if (max_iterations < 1) throw Error(Errc::invalid_argument, "ICP max_iterations must be >= 1");
    if (!(distance_threshold > 0.0))
      throw Error(Errc::invalid_argument, "ICP distance_threshold must be positive");
    if (!(convergence_epsilon >= 0.0))
      throw Error(Errc::invalid_argument, "ICP convergence_epsilon must be >= 0");
  }
};

struct RegistrationResult {
  RigidTransform transform;
  std::size_t inlier_count = 0;
  double fitness = 0.0;  // inliers / source points (correspondences for RANSAC)
  double rmse = 0.0;     // over inlier pairs, meters
  bool converged = false;
  std::size_t iterations_used = 0;

  bool operator==(const RegistrationResult&) const = default;
};

using Correspondence = std::pair<std::size_t, std::size_t>;  // (source, target)

namespace registration_detail {

inline double squared_distance(const FpfhDescriptor& a, const FpfhDescriptor& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.histogram.size(); ++k) {
    const double d = a.histogram[k] - b.histogram[k];
    s += d * d;
  }
  return s;
}

}  // namespace registration_detail

/// Mutual nearest neighbors in descriptor space (Euclidean, ties to the lower
/// index), ordered by source index.
inline std::vector<Correspondence> match_descriptors(std::span<const FpfhDescriptor> source,
                                                     std::span<const FpfhDescriptor> target) {
  if (source.empty() || target.empty())
    throw Error(Errc::invalid_argument, "descriptor lists must be non-empty");
  const std::size_t dim = source.front().size();
  for (const auto& d : source)
    if (d.size() != dim) throw Error(Errc::invalid_argument, "descriptor dimension mismatch");
  for (const auto& d : target)
    if (d.size() != dim) throw Error(Errc::invalid_argument, "descriptor dimension mismatch");

  // Row-major copies keep the double loop cache-friendly.
  std::vector<double> s(source.size() * dim), t(target.size() * dim);
  for (std::size_t i = 0; i < source.size(); ++i)
    std::copy(source[i].histogram.begin(), source[i].histogram.end(), s.begin() + i * dim);
  for (std::size_t j = 0; j < target.size(); ++j)
    std::copy(target[j].histogram.begin(), target[j].histogram.end(), t.begin() + j * dim);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_t(source.size(), 0), best_s(target.size(), 0);
  std::vector<double> dist_t(source.size(), kInf), dist_s(target.size(), kInf);
  for (std::size_t i = 0; i < source.size(); ++i) {
    const double* a = &s[i * dim];
    for (std::size_t j = 0; j < target.size(); ++j) {
      const double* b = &t[j * dim];
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = a[k] - b[k];
        d2 += d * d;
      }
      // Strict comparisons keep the lowest index on ties (loops ascend).
      if (d2 < dist_t[i]) {
        dist_t[i] = d2;
        best_t[i] = j;
      }
      if (d2 < dist_s[j]) {
        dist_s[j] = d2;
        best_s[j] = i;
      }
    }
  }
  std::vector<Correspondence> out;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (best_s[best_t[i]] == i) out.emplace_back(i, best_t[i]);
  }
  return out;
}

namespace registration_detail {

struct Score {
  std::size_t inliers = 0;
  double rmse = 0.0;
};

inline Score score_model(const RigidTransform& t, std::span<const Point3> source,
                         std::span<const Point3> target, std::span<const Correspondence> corr,
                         double max_dist, std::vector<std::size_t>* inliers = nullptr) {
  const double max2 = max_dist * max_dist;
  Score s;
  double sum2 = 0.0;
  if (inliers) inliers->clear();
  for (std::size_t c = 0; c < corr.size(); ++c) {
    const double d2 = (t.apply(source[corr[c].first]) - target[corr[c].second]).squaredNorm();
    if (d2 <= max2) {
      ++s.inliers;
      sum2 += d2;
      if (inliers) inliers->push_back(c);
    }
  }
  s.rmse = s.inliers ? std::sqrt(sum2 / static_cast<double>(s.inliers)) : 0.0;
  return s;
}

inline bool better(const Score& a, const Score& b) {
  return a.inliers > b.inliers || (a.inliers == b.inliers && a.rmse < b.rmse);
}

/// Iterations needed so that an all-inlier sample is drawn with probability
/// `confidence`, given inlier ratio `w`.
inline double required_iterations(double w, std::size_t sample_size, double confidence) {
  const double ws = std::pow(w, static_cast<double>(sample_size));
  if (ws >= 1.0) return 1.0;
  if (ws <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(1.0 - confidence) / std::log(1.0 - ws);
}

inline std::uint64_t default_seed(std::span<const Point3> source, std::span<const Point3> target,
                                  std::span<const Correspondence> corr) {
  ContentHash h;
  for (const auto& p : source) h.add(p);
  for (const auto& p : target) h.add(p);
  for (const auto& c : corr) {
    h.add(static_cast<std::uint64_t>(c.first));
    h.add(static_cast<std::uint64_t>(c.second));
  }
  return h.value();
}

}  // namespace registration_detail

/// Rigid transform taking source positions onto target positions from putative
/// correspondences. Samples failing the edge-length similarity check are
/// discarded before fitting. The best model is refit on all of its inliers.
inline RegistrationResult ransac_register(std::span<const Point3> source, std::span<const Point3> target,
                                          std::span<const Correspondence> corr,
                                          const RansacParams& params) {
  using namespace registration_detail;
  params.validate();
  if (corr.size() < params.sample_size)
    throw Error(Errc::insufficient_pairs, std::to_string(corr.size()) + " correspondences for sample size " +
                                              std::to_string(params.sample_size));
  for (const auto& c : corr) {
    if (c.first >= source.size() || c.second >= target.size())
      throw Error(Errc::invalid_argument, "correspondence index out of range");
  }

  Rng rng(params.rng_seed.value_or(default_seed(source, target, corr)));
  const std::size_t s = params.sample_size;
  const double ratio = params.similarity_edge_ratio;

  std::vector<std::size_t> sample(s);
  std::vector<Point3> src(s), dst(s);
  std::optional<RigidTransform> best_model;
  Score best;
  std::size_t iterations = 0;
  double needed = std::numeric_limits<double>::infinity();

  while (iterations < params.max_iterations && static_cast<double>(iterations) < needed) {
    ++iterations;
    // Uniform sample without replacement.
    for (std::size_t k = 0; k < s; ++k) {
      for (;;) {
        const auto pick = static_cast<std::size_t>(rng.index(corr.size()));
        if (std::find(sample.begin(), sample.begin() + k, pick) == sample.begin() + k) {
          sample[k] = pick;
          break;
        }
      }
      src[k] = source[corr[sample[k]].first];
      dst[k] = target[corr[sample[k]].second];
    }
    bool consistent = true;
    for (std::size_t a = 0; a < s && consistent; ++a) {
      for (std::size_t b = a + 1; b < s; ++b) {
        const double ds = (src[a] - src[b]).norm();
        const double dt = (dst[a] - dst[b]).norm();
        const double hi = std::max(ds, dt);
        if (!(hi > 0.0) || std::min(ds, dt) < ratio * hi) {
          consistent = false;
          break;
        }
      }
    }
    if (!consistent) continue;
    const auto model = detail::fit_rigid(src, dst);
    if (!model) continue;
    const Score sc = score_model(*model, source, target, corr, params.correspondence_distance);
    if (!best_model || better(sc, best)) {
      best = sc;
      best_model = model;
      const double w = static_cast<double>(best.inliers) / static_cast<double>(corr.size());
      needed = required_iterations(w, s, params.confidence);
    }
  }

  RegistrationResult result;
  result.iterations_used = iterations;
  if (!best_model || best.inliers < s) return result;

  std::vector<std::size_t> inliers;
  score_model(*best_model, source, target, corr, params.correspondence_distance, &inliers);
  std::vector<Point3> in_src, in_dst;
  for (auto c : inliers) {
    in_src.push_back(source[corr[c].first]);
    in_dst.push_back(target[corr[c].second]);
  }
  if (const auto refit = detail::fit_rigid(in_src, in_dst)) {
    const Score sc = score_model(*refit, source, target, corr, params.correspondence_distance);
    if (!better(best, sc)) {
      best = sc;
      best_model = refit;
    }
  }
  result.transform = *best_model;
  result.inlier_count = best.inliers;
  result.fitness = static_cast<double>(best.inliers) / static_cast<double>(corr.size());
  result.rmse = best.rmse;
  result.converged = true;
  return result;
}

/// Per-iteration ICP diagnostics: rmse of the pair set before and after its refit.
struct IcpStep {
  std::size_t pairs = 0;
  double rmse_before = 0.0;
  double rmse_after = 0.0;
};

/// Point-to-point ICP. The returned transform maps source into the target
/// frame and already includes `initial`. `converged` is false when no pair
/// falls within the threshold at the first iteration.
inline RegistrationResult icp_refine(std::span<const Point3> source, std::span<const Point3> target,
                                     const RigidTransform& initial, const IcpParams& params,
                                     std::vector<IcpStep>* trace = nullptr) {
  params.validate();
  if (source.empty() || target.empty()) throw Error(Errc::invalid_argument, "ICP on an empty set");
  const SpatialIndex index(target);
  const double max2 = params.distance_threshold * params.distance_threshold;

  struct Pairing {
    std::vector<Point3> src, dst;
    double rmse = 0.0;
  };
  auto pair_up = [&](const RigidTransform& t) {
    Pairing p;
    double sum2 = 0.0;
    for (const auto& s : source) {
      const Point3 moved = t.apply(s);
      const auto nn = index.nearest(moved);
      const double d2 = nn.distance * nn.distance;
      if (d2 <= max2) {
        p.src.push_back(s);
        p.dst.push_back(index.points()[nn.index]);
        sum2 += d2;
      }
    }
    p.rmse = p.src.empty() ? 0.0 : std::sqrt(sum2 / static_cast<double>(p.src.size()));
    return p;
  };
  auto pair_rmse = [](const RigidTransform& t, const Pairing& p) {
    double sum2 = 0.0;
    for (std::size_t i = 0; i < p.src.size(); ++i) sum2 += (t.apply(p.src[i]) - p.dst[i]).squaredNorm();
    return std::sqrt(sum2 / static_cast<double>(p.src.size()));
  };

  RegistrationResult result;
  RigidTransform current = initial;
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < params.max_iterations; ++it) {
    const Pairing pairs = pair_up(current);
    if (pairs.src.empty()) {
      if (it == 0) {
        result.transform = initial;
        result.iterations_used = 1;
        return result;
      }
      break;
    }
    result.iterations_used = it + 1;
    const double rmse = pairs.rmse;
    const bool settled = rmse == 0.0 || (std::isfinite(previous) &&
                                         std::abs(previous - rmse) < params.convergence_epsilon * previous);
    if (settled) break;
    const auto refit = detail::fit_rigid(pairs.src, pairs.dst);
    if (!refit) break;
    if (trace) trace->push_back({pairs.src.size(), rmse, pair_rmse(*refit, pairs)});
    current = *refit;
    previous = rmse;
  }

  const Pairing final_pairs = pair_up(current);
  result.transform = current;
  result.inlier_count = final_pairs.src.size();
  result.fitness = static_cast<double>(final_pairs.src.size()) / static_cast<double>(source.size());
  result.rmse = final_pairs.rmse;
  result.converged = !final_pairs.src.empty();
  return result;
}

}  // namespace issauth
