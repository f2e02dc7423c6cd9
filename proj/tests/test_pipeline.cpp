#include <gtest/gtest.h>

#include <functional>
#include <numbers>
#include <numeric>
#include <set>

#include "support.hpp"

using namespace issauth;

namespace {

const PointCloud& room_scan() {
  static const PointCloud scan = generate_room(random_room_spec(7));
  return scan;
}

const Template& room_template() {
  static const Template t = enroll(room_scan(), PipelineConfig{}, 0);
  return t;
}

}  // namespace

TEST(DataReduction, Examples) {
  EXPECT_NEAR(data_reduction_rate(10000, 220), 0.978, 1e-12);
  EXPECT_EQ(data_reduction_rate(500, 500), 0.0);
  EXPECT_EQ(data_reduction_rate(500, 0), 1.0);
  EXPECT_THROW(data_reduction_rate(0, 0), Error);
  EXPECT_THROW(data_reduction_rate(5, 6), Error);
}

TEST(Fingerprint, EveryParameterChangesIt) {
  const PipelineConfig base;
  const std::vector<std::function<void(PipelineConfig&)>> edits = {
      [](auto& c) { c.profile = Profile::dense; },
      [](auto& c) { c.preprocess.voxel_size = 0.12; },
      [](auto& c) { c.preprocess.normal_neighbors += 1; },
      [](auto& c) { c.preprocess.normal_radius *= 1.5; },
      [](auto& c) { c.preprocess.outlier_radius *= 1.5; },
      [](auto& c) { c.preprocess.outlier_min_neighbors += 1; },
      [](auto& c) { c.preprocess.orientation = NormalOrientation::positive_z; },
      [](auto& c) { c.iss.salient_radius = 0.25; },
      [](auto& c) { c.iss.non_max_radius = 0.3; },
      [](auto& c) { c.iss.gamma_21 = 0.9; },
      [](auto& c) { c.iss.gamma_32 = 0.9; },
      [](auto& c) { c.iss.min_neighbors += 1; },
      [](auto& c) { c.fpfh.feature_radius += 0.01; },
      [](auto& c) { c.fpfh.bins_per_feature += 1; },
      [](auto& c) { c.ransac.correspondence_distance = 0.3; },
      [](auto& c) { c.ransac.max_iterations -= 1; },
      [](auto& c) { c.ransac.confidence = 0.99; },
      [](auto& c) { c.ransac.sample_size = 4; },
      [](auto& c) { c.ransac.similarity_edge_ratio = 0.8; },
      [](auto& c) { c.icp.max_iterations = 30; },
      [](auto& c) { c.icp.distance_threshold = 0.1; },
      [](auto& c) { c.icp.convergence_epsilon = 1e-7; },
      [](auto& c) { c.similarity.match_distance = 0.1; },
  };
  std::set<Fingerprint> seen{base.fingerprint()};
  for (const auto& edit : edits) {
    PipelineConfig c = base;
    edit(c);
    EXPECT_TRUE(seen.insert(c.fingerprint()).second);
  }
  EXPECT_EQ(PipelineConfig{}.fingerprint(), base.fingerprint());
  PipelineConfig t = base;
  t.similarity.decision_threshold = 0.9;
  EXPECT_EQ(t.fingerprint(), base.fingerprint());
}

TEST(Enroll, KeypointFractionOfDownsampledPoints) {
  const PointCloud pre = preprocess(room_scan(), PreprocessParams{});
  const Template& t = room_template();
  const double frac = static_cast<double>(t.size()) / static_cast<double>(pre.size());
  EXPECT_GE(frac, 0.001);
  EXPECT_LE(frac, 0.05);
  EXPECT_EQ(t.raw_point_count, room_scan().size());
  EXPECT_EQ(t.descriptors.size(), t.size());
  EXPECT_GE(t.size(), kMinTemplateKeypoints);
}

TEST(Enroll, DeterministicApartFromTimestamp) {
  const Template a = enroll(room_scan(), PipelineConfig{}, 1);
  const Template b = enroll(room_scan(), PipelineConfig{}, 2);
  EXPECT_NE(a, b);
  Template b1 = b;
  b1.created_at = 1;
  EXPECT_EQ(a, b1);
}

TEST(Enroll, FlatPlaneFails) {
  Rng rng(3);
  PointCloud plane;
  for (int i = 0; i < 40000; ++i) plane.points.emplace_back(rng.uniform(0, 6), rng.uniform(0, 6), 0.0);
  try {
    enroll(plane, PipelineConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::too_few_keypoints);
  }
}

TEST(Enroll, EmptyScanFails) {
  EXPECT_THROW(enroll(PointCloud{}, PipelineConfig{}), Error);
}

TEST(Verify, ExactCopyScoresOne) {
  const AuthDecision d = verify(room_template(), room_scan(), PipelineConfig{});
  EXPECT_EQ(d.similarity, 1.0);
  EXPECT_TRUE(d.accepted);
  EXPECT_EQ(d.matched_count, d.template_count);
  EXPECT_TRUE(d.diagnostic.empty());
}

TEST(Verify, RigidMotionWithCentimeterNoiseScoresHigh) {
  Rng rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    const RigidTransform t = rng.rigid_transform(std::numbers::pi, 3.0);
    const PointCloud probe = perturb_scan(room_scan(), t, 0.01, 0.0, 100 + trial);
    const AuthDecision d = verify(room_template(), probe, PipelineConfig{});
    EXPECT_GE(d.similarity, 0.8) << d.diagnostic;
    EXPECT_TRUE(d.accepted);
  }
}

TEST(Verify, DifferentRoomScoresLow) {
  for (std::uint64_t seed : {21, 22, 23}) {
    const AuthDecision d = verify(room_template(), generate_room(random_room_spec(seed)), PipelineConfig{});
    EXPECT_LT(d.similarity, 0.3) << seed;
    EXPECT_FALSE(d.accepted);
  }
}

TEST(Verify, DecisionInvariants) {
  Rng rng(6);
  const RigidTransform t = rng.rigid_transform(0.5, 1.0);
  const PointCloud probe = perturb_scan(room_scan(), t, 0.01, 0.3, 9);
  const AuthDecision d = verify(room_template(), probe, PipelineConfig{});
  EXPECT_EQ(d.template_count, room_template().size());
  EXPECT_EQ(d.similarity, static_cast<double>(d.matched_count) / static_cast<double>(d.template_count));
  EXPECT_EQ(d.accepted, d.similarity >= d.threshold && d.diagnostic.empty());
  EXPECT_TRUE(d.registration.transform.is_proper());
}

TEST(Verify, ThresholdIsMonotone) {
  const PointCloud probe = perturb_scan(room_scan(), RigidTransform::identity(), 0.01, 0.3, 4);
  const ProcessedScan processed = process_scan(probe, PipelineConfig{});
  bool rejected = false;
  for (double thr = 0.0; thr <= 1.0; thr += 0.05) {
    PipelineConfig c;
    c.similarity.decision_threshold = thr;
    const AuthDecision d = verify_processed(room_template(), processed, c);
    if (rejected) {
      EXPECT_FALSE(d.accepted) << thr;
    }
    rejected = rejected || !d.accepted;
  }
  EXPECT_TRUE(rejected);
}

TEST(Verify, FingerprintMismatchThrows) {
  PipelineConfig c;
  c.preprocess.voxel_size = 0.12;
  try {
    verify(room_template(), room_scan(), c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::fingerprint_mismatch);
  }
}

TEST(Verify, UnusableProbeIsRejectedNotThrown) {
  PointCloud tiny;
  tiny.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
  const AuthDecision d = verify(room_template(), tiny, PipelineConfig{});
  EXPECT_FALSE(d.accepted);
  EXPECT_EQ(d.similarity, 0.0);
  EXPECT_FALSE(d.diagnostic.empty());
}

TEST(Similarity, SelfMatchIsOne) {
  Rng rng(7);
  const auto pts = issauth::testing::random_points(rng, 100, 5.0);
  const auto s = similarity_score(pts, pts, RigidTransform::identity(), 0.2);
  EXPECT_EQ(s.similarity, 1.0);
  EXPECT_EQ(s.matched_count, 100u);
}

TEST(Similarity, HalfDeletedScoresHalf) {
  std::vector<Point3> tmpl;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) tmpl.emplace_back(0.5 * i, 0.5 * j, 0.0);
  Rng rng(8);
  std::vector<std::size_t> order(tmpl.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = order.size() - 1; k > 0; --k) std::swap(order[k], order[rng.index(k + 1)]);
  std::vector<Point3> probe;
  for (std::size_t k = 0; k < 50; ++k) probe.push_back(tmpl[order[k]]);
  const auto s = similarity_score(tmpl, probe, RigidTransform::identity(), 0.2);
  EXPECT_EQ(s.similarity, 0.5);
  // Denominator is the template, so swapping roles gives a different score.
  EXPECT_EQ(similarity_score(probe, tmpl, RigidTransform::identity(), 0.2).similarity, 1.0);
}

TEST(Similarity, UsesTheTransform) {
  const std::vector<Point3> tmpl{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}};
  const RigidTransform t = axis_angle_transform(Vector3::UnitZ(), 0.7, Vector3(3, 1, 0));
  std::vector<Point3> probe;
  for (const auto& p : tmpl) probe.push_back(t.inverse().apply(p));
  EXPECT_EQ(similarity_score(tmpl, probe, t, 1e-6).similarity, 1.0);
  EXPECT_LT(similarity_score(tmpl, probe, RigidTransform::identity(), 1e-6).similarity, 1.0);
}

TEST(Similarity, ErrorsAndEmptyProbe) {
  const std::vector<Point3> pts{{0, 0, 0}};
  EXPECT_THROW(similarity_score({}, pts, RigidTransform::identity(), 0.2), Error);
  EXPECT_THROW(similarity_score(pts, pts, RigidTransform::identity(), 0.0), Error);
  EXPECT_EQ(similarity_score(pts, {}, RigidTransform::identity(), 0.2).similarity, 0.0);
}
