#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wastegrasp/cloud_processing.hpp"
#include "wastegrasp/dataset_io.hpp"
#include "wastegrasp/point_cloud.hpp"

namespace wastegrasp {

/// Parallel two-finger gripper limits, meters.
struct GripperSpec {
  double max_opening = 0.08;
  double min_opening = 0.0;
  double finger_width = 0.02;

  void validate() const;
};

struct ScoreWeights {
  double antipodality = 0.5;
  double flatness = 0.3;
  double plane_proximity = 0.2;

  /// Throws InvalidArgument unless all weights are >= 0 and sum to 1.
  void validate() const;
};

struct GraspConfig {
  double slice_epsilon = 0.005;  // half-width of the slab around the grasping plane, m
  ScoreWeights weights;
  double score_floor = 0.3;
  std::size_t min_points = 100;
  std::size_t side_cap = 50;        // per-side candidates nearest the plane
  std::size_t curvature_k = 16;     // neighborhood for the flatness term
  std::size_t max_candidates = 20;  // 0 keeps every candidate above the floor

  void validate() const;
};

/// Plane through the cloud centroid whose normal is the first principal axis.
struct GraspingPlane {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double epsilon = 0.005;

  double distance(const Eigen::Vector3d& p) const { return std::abs(normal.dot(p - origin)); }
};

GraspingPlane grasping_plane(const PointCloud& cloud, double epsilon);

/// Indices (ascending) of points within `epsilon` of the grasping plane.
/// Throws DegenerateCloud or EmptySlice.
std::vector<std::size_t> grasping_plane_slice(const PointCloud& cloud, double epsilon);

struct OpposingRegions {
  std::vector<std::size_t> side_1;  // below the median lateral projection
  std::vector<std::size_t> side_2;  // above it
  Eigen::Vector3d lateral = Eigen::Vector3d::UnitX();
};

/// Splits a slice at the median of its projections onto
/// normalize(view_axis x principal_axis). Points exactly at the median
/// belong to neither side. Throws OneSidedSlice when a side is empty.
OpposingRegions split_opposing_regions(const std::vector<std::size_t>& slice, const PointCloud& cloud,
                                       const Eigen::Vector3d& view_axis,
                                       const Eigen::Vector3d& principal_axis);

/// A surface point offered as a finger contact.
struct ContactPoint {
  std::size_t index = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double surface_variation = 0.0;  // in [0, 1/3]
};

struct ScoreTerms {
  double antipodality = 0.0;
  double flatness = 0.0;
  double plane_proximity = 0.0;
  double score = 0.0;
  bool feasible = false;
};

/// Weighted sum of the three terms, or 0 when the opening is outside
/// the gripper limits.
ScoreTerms score_contact_pair(const ContactPoint& a, const ContactPoint& b, const GripperSpec& gripper,
                              const GraspingPlane& plane, const ScoreWeights& weights);

struct GraspCandidate {
  std::size_t index_a = 0;  // index_a < index_b
  std::size_t index_b = 0;
  Eigen::Vector3d contact_a = Eigen::Vector3d::Zero();
  Eigen::Vector3d contact_b = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal_a = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d normal_b = Eigen::Vector3d::UnitZ();
  double score = 0.0;
  double opening = 0.0;
  Eigen::Vector3d approach = Eigen::Vector3d::UnitZ();  // viewpoint toward midpoint
};

struct GraspQualityFlags {
  std::optional<double> depth_validity_ratio;
  std::size_t point_count = 0;
  bool low_confidence = false;
};

struct GraspReport {
  std::optional<ClassLabel> label;
  std::vector<GraspCandidate> candidates;  // score descending, ties by (index_a, index_b)
  GraspQualityFlags flags;
  GraspingPlane plane;
};

/// Full contact search on a conditioned cloud with normals.
/// Throws InsufficientCloud below `min_points` and NoFeasibleGrasp when no
/// pair clears the score floor; slicing errors propagate.
GraspReport compute_best_grasp(const PointCloud& cloud, const GripperSpec& gripper,
                               const GraspConfig& config = {});

}  // namespace wastegrasp
