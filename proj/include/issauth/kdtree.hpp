#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <span>
#include <vector>

#include "issauth/error.hpp"
#include "issauth/geometry.hpp"

namespace issauth {

struct Neighbor {
  std::size_t index;
  double distance;

  bool operator==(const Neighbor&) const = default;
};

/// Ascending distance, ties broken by ascending index.
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.index < b.index;
}

/// Exact 3-d tree over a fixed point set. Median split on the axis of largest
/// spread; leaves hold up to kLeafSize indices. Immutable after construction,
/// so concurrent queries are safe.
class SpatialIndex {
 public:
  static constexpr std::size_t kLeafSize = 12;

  SpatialIndex() = default;

  explicit SpatialIndex(std::span<const Point3> points)
      : points_(points.begin(), points.end()), order_(points.size()) {
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / kLeafSize + 1);
      build(0, order_.size());
    }
  }

  explicit SpatialIndex(const PointCloud& cloud) : SpatialIndex(std::span<const Point3>(cloud.points)) {}

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Point3>& points() const { return points_; }

  /// Every point with squared distance <= radius^2, sorted by (distance, index).
  std::vector<Neighbor> radius_search(const Point3& center, double radius) const {
    if (!(radius > 0.0)) throw Error(Errc::invalid_argument, "radius must be positive");
    std::vector<Neighbor> out;
    if (empty()) return out;
    radius_recurse(0, center, radius * radius, out);
    for (auto& n : out) n.distance = std::sqrt(n.distance);
    std::sort(out.begin(), out.end(), neighbor_less);
    return out;
  }

  /// Like radius_search but returns indices only, unsorted. Cheaper for counts.
  void radius_indices(const Point3& center, double radius, std::vector<std::size_t>& out) const {
    if (!(radius > 0.0)) throw Error(Errc::invalid_argument, "radius must be positive");
    out.clear();
    if (empty()) return;
    indices_recurse(0, center, radius * radius, out);
  }

  /// The k nearest points (fewer if the set is smaller), sorted by (distance, index).
  std::vector<Neighbor> knn_search(const Point3& center, std::size_t k) const {
    if (k == 0) throw Error(Errc::invalid_argument, "k must be at least 1");
    std::vector<Neighbor> heap;
    if (empty()) return heap;
    heap.reserve(std::min(k, size()) + 1);
    knn_recurse(0, center, k, heap);
    for (auto& n : heap) n.distance = std::sqrt(n.distance);
    std::sort(heap.begin(), heap.end(), neighbor_less);
    return heap;
  }

  /// Nearest point; the index set must be non-empty.
  Neighbor nearest(const Point3& center) const {
    if (empty()) throw Error(Errc::invalid_argument, "nearest on empty index");
    return knn_search(center, 1).front();
  }

 private:
  struct Node {
    std::uint32_t begin = 0, end = 0;  // leaf range in order_
    std::int32_t left = -1, right = -1;
    int axis = 0;
    double split = 0.0;
    bool leaf() const { return left < 0; }
  };

  std::int32_t build(std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({});
    Node node;
    node.begin = static_cast<std::uint32_t>(begin);
    node.end = static_cast<std::uint32_t>(end);
    if (end - begin <= kLeafSize) {
      nodes_[id] = node;
      return id;
    }
    Vector3 lo = points_[order_[begin]], hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    auto less = [&](std::size_t a, std::size_t b) {
      const double ca = points_[a][axis], cb = points_[b][axis];
      return ca < cb || (ca == cb && a < b);
    };
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, less);
    node.axis = axis;
    node.split = points_[order_[mid]][axis];
    // Points in [begin, mid) have coord <= split, [mid, end) have coord >= split.
    node.left = build(begin, mid);
    node.right = build(mid, end);
    nodes_[id] = node;
    return id;
  }

  void radius_recurse(std::int32_t id, const Point3& c, double r2, std::vector<Neighbor>& out) const {
    const Node& node = nodes_[id];
    if (node.leaf()) {
      for (auto i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const double d2 = (points_[idx] - c).squaredNorm();
        if (d2 <= r2) out.push_back({idx, d2});
      }
      return;
    }
    const double diff = c[node.axis] - node.split;
    const double diff2 = diff * diff;
    if (diff <= 0.0 || diff2 <= r2) radius_recurse(node.left, c, r2, out);
    if (diff >= 0.0 || diff2 <= r2) radius_recurse(node.right, c, r2, out);
  }

  void indices_recurse(std::int32_t id, const Point3& c, double r2, std::vector<std::size_t>& out) const {
    const Node& node = nodes_[id];
    if (node.leaf()) {
      for (auto i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        if ((points_[idx] - c).squaredNorm() <= r2) out.push_back(idx);
      }
      return;
    }
    const double diff = c[node.axis] - node.split;
    const double diff2 = diff * diff;
    if (diff <= 0.0 || diff2 <= r2) indices_recurse(node.left, c, r2, out);
    if (diff >= 0.0 || diff2 <= r2) indices_recurse(node.right, c, r2, out);
  }

  // `heap` is a max-heap on (squared distance, index) holding at most k entries.
  void knn_recurse(std::int32_t id, const Point3& c, std::size_t k, std::vector<Neighbor>& heap) const {
    const Node& node = nodes_[id];
    if (node.leaf()) {
      for (auto i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const Neighbor cand{idx, (points_[idx] - c).squaredNorm()};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end(), neighbor_less);
        } else if (neighbor_less(cand, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), neighbor_less);
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end(), neighbor_less);
        }
      }
      return;
    }
    const double diff = c[node.axis] - node.split;
    const std::int32_t near = diff <= 0.0 ? node.left : node.right;
    const std::int32_t far = diff <= 0.0 ? node.right : node.left;
    knn_recurse(near, c, k, heap);
    // Equal distance still has to be visited so index tie-breaks stay exact.
    if (heap.size() < k || diff * diff <= heap.front().distance) knn_recurse(far, c, k, heap);
  }

  std::vector<Point3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

inline SpatialIndex build_index(const PointCloud& cloud) { return SpatialIndex(cloud); }

}  // namespace issauth
