#include <gtest/gtest.h>

#include <numbers>

#include "support.hpp"

using namespace issauth;

namespace {

// Two orthogonal planes (floor and wall), randomly sampled, normals from
// the pipeline.
PointCloud corner_patch() {
  Rng rng(11);
  PointCloud c;
  for (int i = 0; i < 900; ++i) {
    c.points.emplace_back(rng.uniform(0, 1.5), rng.uniform(0, 1.5), 0.0);
    c.points.emplace_back(rng.uniform(0, 1.5), 0.0, rng.uniform(0.02, 1.5));
  }
  return estimate_normals(c, PreprocessParams{});
}

double l1(const FpfhDescriptor& a, const FpfhDescriptor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.histogram[i] - b.histogram[i]);
  return s;
}

void expect_normalized(const FpfhDescriptor& d, std::size_t bins) {
  for (std::size_t s = 0; s < 3; ++s) {
    double sum = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      EXPECT_GE(d.histogram[s * bins + b], 0.0);
      sum += d.histogram[s * bins + b];
    }
    EXPECT_NEAR(sum, 100.0, 1e-6);
  }
}

std::size_t oracle_bin(double v, double lo, double hi, std::size_t bins) {
  const double t = (v - lo) / (hi - lo) * static_cast<double>(bins);
  if (t <= 0.0) return 0;
  return std::min<std::size_t>(bins - 1, static_cast<std::size_t>(t));
}

}  // namespace

TEST(PairFeatures, ParallelNormalsOrthogonalToDisplacement) {
  const auto f = pair_features(Point3(0, 0, 0), Vector3(0, 0, 1), Point3(1, 0, 0), Vector3(0, 0, 1));
  ASSERT_TRUE(f.ok());
  EXPECT_EQ(f.alpha, 0.0);
  EXPECT_EQ(f.phi, 0.0);
  EXPECT_EQ(f.theta, 0.0);
}

TEST(PairFeatures, CoincidentAndDegenerate) {
  EXPECT_EQ(pair_features(Point3(1, 1, 1), Vector3(0, 0, 1), Point3(1, 1, 1), Vector3(0, 0, 1)).status,
            PairStatus::coincident);
  EXPECT_EQ(pair_features(Point3(0, 0, 0), Vector3(0, 0, 1), Point3(0, 0, 1), Vector3(1, 0, 0)).status,
            PairStatus::degenerate_frame);
}

TEST(PairFeatures, MatchesDirectFormulas) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const Point3 ps(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Point3 pt(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Vector3 ns = rng.unit_vector(), nt = rng.unit_vector();
    const auto f = pair_features(ps, ns, pt, nt);
    ASSERT_TRUE(f.ok());
    const Vector3 d = (pt - ps).normalized();
    const Vector3 v = ns.cross(d).normalized();
    const Vector3 w = ns.cross(v);
    EXPECT_NEAR(f.alpha, v.dot(nt), 1e-12);
    EXPECT_NEAR(f.phi, ns.dot(d), 1e-12);
    EXPECT_NEAR(f.theta, std::atan2(w.dot(nt), ns.dot(nt)), 1e-12);
    EXPECT_GT(f.theta, -std::numbers::pi);
    EXPECT_LE(f.theta, std::numbers::pi);
  }
}

TEST(PairFeatures, SourceIsTheNormalCloserToTheDisplacement) {
  const Point3 p1(0, 0, 0), p2(1, 0, 0);
  const Vector3 n1(0, 0, 1), n2 = Vector3(1, 0, 1).normalized();
  const auto f = oriented_pair_features(p1, n1, p2, n2);
  const auto expected = pair_features(p2, n2, p1, n1);
  EXPECT_EQ(f.alpha, expected.alpha);
  EXPECT_EQ(f.phi, expected.phi);
  EXPECT_EQ(f.theta, expected.theta);
}

TEST(Binning, EdgesGoToTheHigherBin) {
  EXPECT_EQ(feature_bin(-1.0, -1.0, 1.0, 11), 0u);
  EXPECT_EQ(feature_bin(1.0, -1.0, 1.0, 11), 10u);
  EXPECT_EQ(feature_bin(0.0, -1.0, 1.0, 2), 1u);
  EXPECT_EQ(theta_bin(-std::numbers::pi, 11), 10u);
  EXPECT_EQ(theta_bin(std::numbers::pi, 11), 10u);
  EXPECT_EQ(theta_bin(0.0, 2), 1u);
}

TEST(Spfh, SingleNeighborGivesSpikes) {
  PointCloud c;
  c.points = {{0, 0, 0}, {0.1, 0.02, 0.01}};
  c.normals = {Vector3(0, 0, 1), Vector3(0.1, 0, 1).normalized()};
  const FpfhParams params;
  const auto h = compute_spfh(c, SpatialIndex(c), 0, params);
  ASSERT_EQ(h.size(), params.dimension());
  for (std::size_t s = 0; s < 3; ++s) {
    std::size_t nonzero = 0;
    for (std::size_t b = 0; b < params.bins_per_feature; ++b) {
      const double v = h.histogram[s * params.bins_per_feature + b];
      if (v != 0.0) {
        ++nonzero;
        EXPECT_EQ(v, 100.0);
      }
    }
    EXPECT_EQ(nonzero, 1u);
  }
}

TEST(Spfh, IsolatedPointThrows) {
  PointCloud c;
  c.points = {{0, 0, 0}, {5, 0, 0}};
  c.normals = {Vector3(0, 0, 1), Vector3(0, 0, 1)};
  try {
    compute_spfh(c, SpatialIndex(c), 0, FpfhParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::isolated_keypoint);
  }
}

TEST(Spfh, MatchesBruteForceBinning) {
  Rng rng(2);
  const FpfhParams params;
  const std::size_t bins = params.bins_per_feature;
  for (int trial = 0; trial < 50; ++trial) {
    PointCloud c;
    c.points.emplace_back(0, 0, 0);
    c.normals.push_back(rng.unit_vector());
    for (int i = 0; i < 20; ++i) {
      c.points.push_back(0.25 * rng.unit_vector() * rng.uniform(0.1, 1.0));
      c.normals.push_back(rng.unit_vector());
    }
    const auto h = compute_spfh(c, SpatialIndex(c), 0, params);
    std::vector<double> expected(3 * bins, 0.0);
    int used = 0;
    for (std::size_t j = 1; j < c.size(); ++j) {
      Point3 ps = c.points[0], pt = c.points[j];
      Vector3 ns = c.normals[0], nt = c.normals[j];
      const Vector3 dd = (pt - ps).normalized();
      if (std::abs(ns.dot(dd)) < std::abs(nt.dot(dd))) {
        std::swap(ps, pt);
        std::swap(ns, nt);
      }
      const Vector3 d = (pt - ps).normalized();
      const Vector3 v = ns.cross(d).normalized();
      const Vector3 w = ns.cross(v);
      double theta = std::atan2(w.dot(nt), ns.dot(nt));
      if (theta <= -std::numbers::pi) theta = std::numbers::pi;
      expected[oracle_bin(v.dot(nt), -1, 1, bins)] += 1;
      expected[bins + oracle_bin(ns.dot(d), -1, 1, bins)] += 1;
      expected[2 * bins + oracle_bin(theta, -std::numbers::pi, std::numbers::pi, bins)] += 1;
      ++used;
    }
    for (auto& e : expected) e *= 100.0 / used;
    for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_NEAR(h.histogram[k], expected[k], 1e-9);
    expect_normalized(h, bins);
  }
}

TEST(Spfh, PointMirroredNeighborhoodReversesAlphaAndPhi) {
  Rng rng(3);
  const FpfhParams params;
  const std::size_t bins = params.bins_per_feature;
  for (int trial = 0; trial < 20; ++trial) {
    PointCloud a, b;
    const Point3 center(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Vector3 nc = rng.unit_vector();
    a.points.push_back(center);
    a.normals.push_back(nc);
    b = a;
    for (int i = 0; i < 15; ++i) {
      const Vector3 off = 0.2 * rng.unit_vector() * rng.uniform(0.2, 1.0);
      const Vector3 n = rng.unit_vector();
      a.points.push_back(center + off);
      a.normals.push_back(n);
      b.points.push_back(center - off);
      b.normals.push_back(n);
    }
    const auto ha = compute_spfh(a, SpatialIndex(a), 0, params);
    const auto hb = compute_spfh(b, SpatialIndex(b), 0, params);
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t k = 0; k < bins; ++k)
        EXPECT_NEAR(ha.histogram[s * bins + k], hb.histogram[s * bins + bins - 1 - k], 1e-9);
  }
}

TEST(Fpfh, RotationInvariantOverTwentyMotions) {
  const PointCloud c = corner_patch();
  const SpatialIndex index(c);
  const KeypointSet ks = KeypointSet::all_points(c).select(std::vector<std::size_t>{0, 40, 455, 901, 1333, 1798});
  const FpfhParams params;
  const FpfhResult base = compute_fpfh(c, index, ks, params);
  ASSERT_EQ(base.descriptors.size(), ks.size());
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const RigidTransform t = rng.rigid_transform(std::numbers::pi, 5.0);
    const PointCloud moved = apply_transform(c, t);
    const FpfhResult r = compute_fpfh(moved, SpatialIndex(moved), ks, params);
    ASSERT_EQ(r.descriptors.size(), base.descriptors.size());
    for (std::size_t k = 0; k < ks.size(); ++k) EXPECT_LT(l1(r.descriptors[k], base.descriptors[k]), 1e-6);
    // Normals re-estimated in the moved frame keep their orientation.
    const PointCloud renormed = estimate_normals(moved, PreprocessParams{});
    const FpfhResult q = compute_fpfh(renormed, SpatialIndex(renormed), ks, params);
    for (std::size_t k = 0; k < ks.size(); ++k) EXPECT_LT(l1(q.descriptors[k], base.descriptors[k]), 1e-6);
  }
}

TEST(Fpfh, NormalizedAndDeterministic) {
  const PointCloud c = corner_patch();
  const SpatialIndex index(c);
  const KeypointSet ks = KeypointSet::all_points(c);
  const FpfhParams params;
  const FpfhResult a = compute_fpfh(c, index, ks, params);
  const FpfhResult b = compute_fpfh(c, index, ks, params);
  EXPECT_EQ(a.descriptors, b.descriptors);
  for (const auto& d : a.descriptors) expect_normalized(d, params.bins_per_feature);
}

TEST(Fpfh, IsolatedKeypointIsDropped) {
  PointCloud c = corner_patch();
  c.points.emplace_back(20, 20, 20);
  c.normals.emplace_back(0, 0, 1);
  const SpatialIndex index(c);
  const KeypointSet ks = KeypointSet::all_points(c).select(std::vector<std::size_t>{0, c.size() - 1, 5});
  const FpfhResult r = compute_fpfh(c, index, ks, FpfhParams{});
  EXPECT_EQ(r.dropped, 1u);
  ASSERT_EQ(r.descriptors.size(), ks.size() - r.dropped);
  EXPECT_EQ(r.keypoints.indices, (std::vector<std::size_t>{0, 5}));
}
