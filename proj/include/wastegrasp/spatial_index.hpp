#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace wastegrasp {

struct Neighbor {
  std::size_t index = 0;
  double squared_distance = 0.0;
};

/// Immutable kd-tree over a point set. The points are copied, so the
/// index stays valid independently of the source cloud.
///
/// Results are ordered by (squared distance, point index); equal distances
/// resolve to the lower index, so queries agree exactly with a linear scan.
/// Queries are const and safe to run concurrently.
class SpatialIndex {
 public:
  explicit SpatialIndex(std::span<const Eigen::Vector3d> points, std::size_t leaf_size = 12);

  std::size_t size() const noexcept { return points_.size(); }
  const Eigen::Vector3d& point(std::size_t i) const { return points_[i]; }

  /// The min(k, size()) nearest points, including any point equal to `query`.
  std::vector<Neighbor> knn(const Eigen::Vector3d& query, std::size_t k) const;

  /// All points with distance <= radius.
  std::vector<Neighbor> radius(const Eigen::Vector3d& query, double radius) const;

 private:
  struct Node {
    // Leaves hold [begin, end) into order_; inner nodes split on `axis`.
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = -1;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  template <typename Visitor>
  void search(std::int32_t node, const Eigen::Vector3d& query, Visitor& visitor) const;

  std::vector<Eigen::Vector3d> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
  std::int32_t root_ = -1;
};

}  // namespace wastegrasp
