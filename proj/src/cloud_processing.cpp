#include "wastegrasp/cloud_processing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

#include "wastegrasp/error.hpp"
#include "wastegrasp/symmetric_eigen3.hpp"

namespace wastegrasp {

void PointCloud::check_consistent() const {
  if (has_colors() && colors.size() != points.size()) {
    throw Error(ErrorCode::InvalidArgument, "colors are not parallel to points");
  }
  if (has_normals() && normals.size() != points.size()) {
    throw Error(ErrorCode::InvalidArgument, "normals are not parallel to points");
  }
}

AxisAlignedBox bounding_box(const PointCloud& cloud) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "bounding box of an empty cloud");
  AxisAlignedBox box{cloud.points.front(), cloud.points.front()};
  for (const auto& p : cloud.points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

namespace {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093u;
    h ^= static_cast<std::uint64_t>(k.y) * 19349663u;
    h ^= static_cast<std::uint64_t>(k.z) * 83492791u;
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
  if (!(voxel > 0.0)) throw Error(ErrorCode::InvalidArgument, "voxel size must be positive");
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "cannot downsample an empty cloud");
  cloud.check_consistent();

  struct Cell {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    std::array<std::uint64_t, 3> color_sum{};
    std::size_t count = 0;
  };
  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> slot_of;
  std::vector<Cell> cells;
  slot_of.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d& p = cloud.points[i];
    const VoxelKey key{static_cast<std::int64_t>(std::floor(p.x() / voxel)),
                       static_cast<std::int64_t>(std::floor(p.y() / voxel)),
                       static_cast<std::int64_t>(std::floor(p.z() / voxel))};
    auto [it, inserted] = slot_of.try_emplace(key, cells.size());
    if (inserted) cells.emplace_back();
    Cell& cell = cells[it->second];
    cell.sum += p;
    ++cell.count;
    if (cloud.has_colors()) {
      for (int c = 0; c < 3; ++c) cell.color_sum[c] += cloud.colors[i][c];
    }
  }

  PointCloud out;
  out.viewpoint = cloud.viewpoint;
  out.points.reserve(cells.size());
  for (const Cell& cell : cells) {
    const double n = static_cast<double>(cell.count);
    out.points.push_back(cell.sum / n);
    if (cloud.has_colors()) {
      Rgb rgb;
      for (int c = 0; c < 3; ++c) {
        rgb[c] = static_cast<std::uint8_t>(std::lround(static_cast<double>(cell.color_sum[c]) / n));
      }
      out.colors.push_back(rgb);
    }
  }
  return out;
}

std::vector<double> mean_neighbor_distances(const PointCloud& cloud, const SpatialIndex& index,
                                            std::size_t k) {
  std::vector<double> result(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::vector<Neighbor> neighbors = index.knn(cloud.points[i], k + 1);
    auto self = std::find_if(neighbors.begin(), neighbors.end(),
                             [&](const Neighbor& n) { return n.index == i; });
    if (self != neighbors.end()) {
      neighbors.erase(self);
    } else {
      neighbors.pop_back();
    }
    double sum = 0.0;
    for (const auto& n : neighbors) sum += std::sqrt(n.squared_distance);
    result[i] = sum / static_cast<double>(neighbors.size());
  }
  return result;
}

PointCloud remove_statistical_outliers(const PointCloud& cloud, std::size_t k, double sigma) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "outlier k must be >= 1");
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "outlier sigma must be positive");
  if (cloud.size() <= k) {
    throw Error(ErrorCode::TooFewPoints, "outlier removal needs more than k=" + std::to_string(k) +
                                             " points, got " + std::to_string(cloud.size()));
  }
  cloud.check_consistent();
  const SpatialIndex index(cloud.points);
  const std::vector<double> distances = mean_neighbor_distances(cloud, index, k);

  const double n = static_cast<double>(distances.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double d : distances) {
    sum += d;
    sum_sq += d * d;
  }
  const double mean = sum / n;
  const double variance = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
  const double threshold = mean + sigma * std::sqrt(variance);

  PointCloud out;
  out.viewpoint = cloud.viewpoint;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (distances[i] > threshold) continue;
    out.points.push_back(cloud.points[i]);
    if (cloud.has_colors()) out.colors.push_back(cloud.colors[i]);
    if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
  }
  return out;
}

Eigen::Matrix3d covariance(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& mean) {
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector3d d = p - mean;
    cov.noalias() += d * d.transpose();
  }
  return cov / static_cast<double>(points.size());
}

namespace {

Eigen::Matrix3d neighborhood_covariance(const PointCloud& cloud, const std::vector<Neighbor>& neighbors) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& n : neighbors) mean += cloud.points[n.index];
  mean /= static_cast<double>(neighbors.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& n : neighbors) {
    const Eigen::Vector3d d = cloud.points[n.index] - mean;
    cov.noalias() += d * d.transpose();
  }
  return cov / static_cast<double>(neighbors.size());
}

}  // namespace

PointCloud estimate_normals(const PointCloud& cloud, std::size_t k) {
  if (k < 3) throw Error(ErrorCode::InvalidArgument, "normal estimation needs k >= 3");
  if (cloud.size() <= k) {
    throw Error(ErrorCode::TooFewPoints, "normal estimation needs more than k=" + std::to_string(k) +
                                             " points, got " + std::to_string(cloud.size()));
  }
  cloud.check_consistent();
  const SpatialIndex index(cloud.points);
  PointCloud out = cloud;
  out.normals.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Matrix3d cov = neighborhood_covariance(cloud, index.knn(cloud.points[i], k));
    Eigen::Vector3d normal = eigen_symmetric3(cov).vectors.col(2);
    if (normal.dot(cloud.viewpoint - cloud.points[i]) < 0.0) normal = -normal;
    out.normals[i] = normal;
  }
  return out;
}

double surface_variation(const PointCloud& cloud, const SpatialIndex& index, std::size_t i,
                         std::size_t k) {
  const Eigen::Matrix3d cov = neighborhood_covariance(cloud, index.knn(cloud.points[i], k));
  const Eigen::Vector3d values = eigen_symmetric3(cov).values.cwiseMax(0.0);
  const double total = values.sum();
  return total > 0.0 ? values[2] / total : 0.0;
}

Eigen::Vector3d canonical_axis_sign(const Eigen::Vector3d& axis) {
  int largest = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(axis[i]) > std::abs(axis[largest])) largest = i;
  }
  return axis[largest] < 0.0 ? Eigen::Vector3d(-axis) : axis;
}

PrincipalAxes centroid_and_principal_axes(std::span<const Eigen::Vector3d> points) {
  if (points.size() < 3) {
    throw Error(ErrorCode::DegenerateCloud, "principal axes need at least 3 points, got " +
                                                std::to_string(points.size()));
  }
  const bool all_equal = std::all_of(points.begin(), points.end(),
                                     [&](const Eigen::Vector3d& p) { return p == points.front(); });
  if (all_equal) throw Error(ErrorCode::DegenerateCloud, "all points coincide");
  PrincipalAxes result;
  for (const auto& p : points) result.centroid += p;
  result.centroid /= static_cast<double>(points.size());
  const Eigen::Matrix3d cov = covariance(points, result.centroid);

  const SymmetricEigen3 eig = eigen_symmetric3(cov);
  result.eigenvalues = eig.values;
  const Eigen::Vector3d a0 = canonical_axis_sign(eig.vectors.col(0));
  const Eigen::Vector3d a1 = canonical_axis_sign(eig.vectors.col(1));
  result.axes.col(0) = a0;
  result.axes.col(1) = a1;
  result.axes.col(2) = a0.cross(a1);
  return result;
}

PrincipalAxes centroid_and_principal_axes(const PointCloud& cloud) {
  return centroid_and_principal_axes(std::span<const Eigen::Vector3d>(cloud.points));
}

}  // namespace wastegrasp
