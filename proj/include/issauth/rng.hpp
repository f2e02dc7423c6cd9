#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <type_traits>

#include "issauth/geometry.hpp"

namespace issauth {

/// 64-bit FNV-1a, used to derive default seeds from input content.
class ContentHash {
 public:
  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void add(const T& value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (auto b : bytes) {
      state_ ^= b;
      state_ *= 0x100000001b3ULL;
    }
  }

  void add(const Point3& p) {
    add(p.x());
    add(p.y());
    add(p.z());
  }

  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

/// Seedable generator with portable output. The standard distributions are
/// implementation-defined, so the transforms from raw mt19937_64 words are
/// written out here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  /// Standard normal via Box-Muller (one value per call).
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vector3 unit_vector() {
    for (;;) {
      Vector3 v(normal(), normal(), normal());
      const double n = v.norm();
      if (n > 1e-12) return v / n;
    }
  }

  /// Random axis, angle uniform in [0, max_angle], translation uniform in the
  /// cube [-max_translation, max_translation]^3.
  RigidTransform rigid_transform(double max_angle, double max_translation) {
    const Vector3 axis = unit_vector();
    const double angle = uniform(0.0, max_angle);
    const Vector3 t(uniform(-max_translation, max_translation),
                    uniform(-max_translation, max_translation),
                    uniform(-max_translation, max_translation));
    return axis_angle_transform(axis, angle, t);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace issauth
