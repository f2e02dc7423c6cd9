#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"

using namespace issauth;
using issauth::testing::random_points;

namespace {

std::vector<Neighbor> brute_radius(const std::vector<Point3>& pts, const Point3& c, double r) {
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d2 = (pts[i] - c).squaredNorm();
    if (d2 <= r * r) out.push_back({i, std::sqrt(d2)});
  }
  std::sort(out.begin(), out.end(), neighbor_less);
  return out;
}

std::vector<Neighbor> brute_knn(const std::vector<Point3>& pts, const Point3& c, std::size_t k) {
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < pts.size(); ++i) all.push_back({i, (pts[i] - c).norm()});
  std::sort(all.begin(), all.end(), neighbor_less);
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace

TEST(SpatialIndex, EmptyIndexAnswersEmpty) {
  const SpatialIndex index(PointCloud{});
  EXPECT_TRUE(index.radius_search(Point3::Zero(), 1.0).empty());
  EXPECT_TRUE(index.knn_search(Point3::Zero(), 3).empty());
}

TEST(SpatialIndex, SinglePointIsAlwaysNearest) {
  PointCloud c;
  c.points = {{5, 5, 5}};
  const SpatialIndex index = build_index(c);
  EXPECT_EQ(index.nearest(Point3(-100, 3, 2)).index, 0u);
}

TEST(SpatialIndex, IsolatedPointTinyRadius) {
  Rng rng(1);
  auto pts = random_points(rng, 100);
  pts.emplace_back(50, 50, 50);
  const SpatialIndex index(pts);
  const auto hits = index.radius_search(Point3(50, 50, 50), 1e-6);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].index, 100u);
  EXPECT_EQ(hits[0].distance, 0.0);
}

TEST(SpatialIndex, UnitGridRadiusOne) {
  std::vector<Point3> pts;
  for (int x = 0; x < 5; ++x)
    for (int y = 0; y < 5; ++y)
      for (int z = 0; z < 5; ++z) pts.emplace_back(x, y, z);
  const SpatialIndex index(pts);
  const auto hits = index.radius_search(Point3(2, 2, 2), 1.0);
  ASSERT_EQ(hits.size(), 7u);
  EXPECT_EQ(hits[0].distance, 0.0);
  for (std::size_t i = 1; i < hits.size(); ++i) EXPECT_EQ(hits[i].distance, 1.0);
  EXPECT_TRUE(std::is_sorted(hits.begin(), hits.end(), neighbor_less));
}

TEST(SpatialIndex, EmptyResultOffCloud) {
  std::vector<Point3> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const SpatialIndex index(pts);
  EXPECT_TRUE(index.radius_search(Point3(0.5, 0.5, 5), 0.1).empty());
}

TEST(SpatialIndex, KnnLargerThanCloudReturnsAllSorted) {
  Rng rng(2);
  const auto pts = random_points(rng, 20);
  const SpatialIndex index(pts);
  const auto hits = index.knn_search(Point3::Zero(), 100);
  EXPECT_EQ(hits, brute_knn(pts, Point3::Zero(), 100));
}

TEST(SpatialIndex, KnnOnMemberReturnsItself) {
  Rng rng(3);
  const auto pts = random_points(rng, 500);
  const SpatialIndex index(pts);
  const auto hits = index.knn_search(pts[17], 1);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].index, 17u);
  EXPECT_EQ(hits[0].distance, 0.0);
}

TEST(SpatialIndex, InvalidArguments) {
  Rng rng(4);
  const SpatialIndex index(random_points(rng, 10));
  EXPECT_THROW(index.radius_search(Point3::Zero(), 0.0), Error);
  EXPECT_THROW(index.radius_search(Point3::Zero(), -1.0), Error);
  EXPECT_THROW(index.knn_search(Point3::Zero(), 0), Error);
}

TEST(SpatialIndex, TenThousandPointsMatchBruteForce) {
  Rng rng(5);
  const auto pts = random_points(rng, 10000);
  const SpatialIndex index(pts);
  for (int q = 0; q < 100; ++q) {
    const Point3 c(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
    EXPECT_EQ(index.radius_search(c, 0.15), brute_radius(pts, c, 0.15));
    EXPECT_EQ(index.knn_search(c, 8), brute_knn(pts, c, 8));
  }
}

// Quantized coordinates force many exact distance ties.
TEST(SpatialIndex, RandomTriplesMatchBruteForceIncludingTies) {
  Rng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(300);
    std::vector<Point3> pts;
    const bool quantized = trial % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      Point3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      if (quantized) p = (p * 4.0).array().round() / 4.0;
      pts.push_back(p);
    }
    const SpatialIndex index(pts);
    Point3 c(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
    if (quantized) c = (c * 4.0).array().round() / 4.0;
    const double r = rng.uniform(0.05, 1.0);
    const std::size_t k = 1 + rng.index(20);
    ASSERT_EQ(index.radius_search(c, r), brute_radius(pts, c, r)) << "trial " << trial;
    ASSERT_EQ(index.knn_search(c, k), brute_knn(pts, c, k)) << "trial " << trial;
    std::vector<std::size_t> idx;
    index.radius_indices(c, r, idx);
    std::sort(idx.begin(), idx.end());
    std::vector<std::size_t> expected;
    for (const auto& nb : brute_radius(pts, c, r)) expected.push_back(nb.index);
    std::sort(expected.begin(), expected.end());
    ASSERT_EQ(idx, expected);
  }
}

TEST(SpatialIndex, ConstructionIsDeterministic) {
  Rng rng(7);
  const auto pts = random_points(rng, 2000);
  const SpatialIndex a(pts), b(pts);
  for (int q = 0; q < 50; ++q) {
    const Point3 c = pts[rng.index(pts.size())];
    EXPECT_EQ(a.knn_search(c, 10), b.knn_search(c, 10));
  }
}
