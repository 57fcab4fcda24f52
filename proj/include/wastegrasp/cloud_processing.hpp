#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "wastegrasp/point_cloud.hpp"
#include "wastegrasp/spatial_index.hpp"

namespace wastegrasp {

/// One point per occupied voxel at the centroid of its members, colors
/// averaged; normals are dropped. Voxels appear in order of their first
/// member, so output is deterministic.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel);

/// Mean distance from each point to its k nearest other points.
std::vector<double> mean_neighbor_distances(const PointCloud& cloud, const SpatialIndex& index,
                                            std::size_t k);

/// Drops points whose mean k-neighbor distance exceeds
/// mean + sigma * stddev of that statistic over the cloud (sample stddev).
/// Throws TooFewPoints unless size() > k.
PointCloud remove_statistical_outliers(const PointCloud& cloud, std::size_t k, double sigma);

/// Per-point normal from the k-neighborhood covariance (the point itself
/// included), oriented toward the cloud's viewpoint. Requires size() > k >= 3.
PointCloud estimate_normals(const PointCloud& cloud, std::size_t k);

/// Surface variation lambda_min / (lambda_0 + lambda_1 + lambda_2) of the k-neighborhood
/// around point `i`; 0 for a locally planar patch, 1/3 for isotropic scatter.
double surface_variation(const PointCloud& cloud, const SpatialIndex& index, std::size_t i,
                         std::size_t k);

struct PrincipalAxes {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  Eigen::Matrix3d axes = Eigen::Matrix3d::Identity();  // columns, eigenvalues descending
  Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();
};

/// Population covariance (divides by n).
Eigen::Matrix3d covariance(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& mean);

/// Centroid and covariance eigenbasis. The first two axes are signed so
/// their largest-magnitude component is positive (ties toward the earlier
/// coordinate); the third is their cross product, keeping the triad
/// right-handed. Throws DegenerateCloud for fewer than 3 points or when
/// all points coincide.
PrincipalAxes centroid_and_principal_axes(const PointCloud& cloud);
PrincipalAxes centroid_and_principal_axes(std::span<const Eigen::Vector3d> points);

/// Canonical sign for an axis; see centroid_and_principal_axes.
Eigen::Vector3d canonical_axis_sign(const Eigen::Vector3d& axis);

}  // namespace wastegrasp
