#include "wastegrasp/spatial_index.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

#include "wastegrasp/error.hpp"

namespace wastegrasp {

namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  if (a.squared_distance != b.squared_distance) return a.squared_distance < b.squared_distance;
  return a.index < b.index;
}

}  // namespace

SpatialIndex::SpatialIndex(std::span<const Eigen::Vector3d> points, std::size_t leaf_size)
    : points_(points.begin(), points.end()), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  if (points_.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::InvalidArgument, "too many points for the spatial index");
  }
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) root_ = build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= leaf_size_) return id;

  Eigen::Vector3d lo = points_[order_[begin]];
  Eigen::Vector3d hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all points coincide

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];

  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

// Points left of `mid` have coordinate <= split and points right of it >= split.
template <typename Visitor>
void SpatialIndex::search(std::int32_t node_id, const Eigen::Vector3d& query, Visitor& visitor) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      visitor.offer(idx, (points_[idx] - query).squaredNorm());
    }
    return;
  }
  const double delta = query[node.axis] - node.split;
  const std::int32_t near = delta <= 0.0 ? node.left : node.right;
  const std::int32_t far = delta <= 0.0 ? node.right : node.left;
  search(near, query, visitor);
  if (delta * delta <= visitor.bound()) search(far, query, visitor);
}

std::vector<Neighbor> SpatialIndex::knn(const Eigen::Vector3d& query, std::size_t k) const {
  struct KnnVisitor {
    std::size_t k;
    std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(&closer)> heap{&closer};
    void offer(std::size_t index, double d2) {
      const Neighbor candidate{index, d2};
      if (heap.size() < k) {
        heap.push(candidate);
      } else if (closer(candidate, heap.top())) {
        heap.pop();
        heap.push(candidate);
      }
    }
    double bound() const {
      return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().squared_distance;
    }
  };
  if (k == 0 || root_ < 0) return {};
  KnnVisitor visitor{k};
  search(root_, query, visitor);
  std::vector<Neighbor> result;
  result.reserve(visitor.heap.size());
  while (!visitor.heap.empty()) {
    result.push_back(visitor.heap.top());
    visitor.heap.pop();
  }
  std::reverse(result.begin(), result.end());
  return result;
}

std::vector<Neighbor> SpatialIndex::radius(const Eigen::Vector3d& query, double radius) const {
  struct RadiusVisitor {
    double r2;
    std::vector<Neighbor> found;
    void offer(std::size_t index, double d2) {
      if (d2 <= r2) found.push_back({index, d2});
    }
    double bound() const { return r2; }
  };
  if (root_ < 0 || radius < 0.0) return {};
  RadiusVisitor visitor{radius * radius, {}};
  search(root_, query, visitor);
  std::sort(visitor.found.begin(), visitor.found.end(), closer);
  return visitor.found;
}

}  // namespace wastegrasp
