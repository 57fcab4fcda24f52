#include "wastegrasp/grasp_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "wastegrasp/error.hpp"
#include "wastegrasp/spatial_index.hpp"

namespace wastegrasp {

void GripperSpec::validate() const {
  if (!(min_opening >= 0.0 && min_opening < max_opening)) {
    throw Error(ErrorCode::InvalidArgument, "gripper needs 0 <= min_opening < max_opening");
  }
  if (!(finger_width > 0.0)) throw Error(ErrorCode::InvalidArgument, "finger_width must be positive");
}

void ScoreWeights::validate() const {
  if (antipodality < 0.0 || flatness < 0.0 || plane_proximity < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "score weights must be non-negative");
  }
  if (std::abs(antipodality + flatness + plane_proximity - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "score weights must sum to 1");
  }
}

void GraspConfig::validate() const {
  if (!(slice_epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "slice_epsilon must be positive");
  weights.validate();
  if (!(score_floor >= 0.0 && score_floor <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "score_floor must lie in [0, 1]");
  }
  if (side_cap == 0) throw Error(ErrorCode::InvalidArgument, "side_cap must be positive");
  if (curvature_k < 3) throw Error(ErrorCode::InvalidArgument, "curvature_k must be >= 3");
}

GraspingPlane grasping_plane(const PointCloud& cloud, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "slice epsilon must be positive");
  const PrincipalAxes axes = centroid_and_principal_axes(cloud);
  return GraspingPlane{axes.centroid, axes.axes.col(0), epsilon};
}

namespace {

std::vector<std::size_t> slice_indices(const PointCloud& cloud, const GraspingPlane& plane) {
  std::vector<std::size_t> slice;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (plane.distance(cloud.points[i]) <= plane.epsilon) slice.push_back(i);
  }
  if (slice.empty()) throw Error(ErrorCode::EmptySlice, "no points within the grasping slab");
  return slice;
}

}  // namespace

std::vector<std::size_t> grasping_plane_slice(const PointCloud& cloud, double epsilon) {
  return slice_indices(cloud, grasping_plane(cloud, epsilon));
}

OpposingRegions split_opposing_regions(const std::vector<std::size_t>& slice, const PointCloud& cloud,
                                       const Eigen::Vector3d& view_axis,
                                       const Eigen::Vector3d& principal_axis) {
  if (slice.empty()) throw Error(ErrorCode::EmptySlice, "cannot split an empty slice");
  const Eigen::Vector3d cross = view_axis.normalized().cross(principal_axis.normalized());
  if (cross.norm() < 1e-9) {
    throw Error(ErrorCode::OneSidedSlice, "principal axis points along the line of sight");
  }
  OpposingRegions regions;
  regions.lateral = cross.normalized();

  std::vector<double> projections;
  projections.reserve(slice.size());
  for (std::size_t i : slice) projections.push_back(regions.lateral.dot(cloud.points[i]));
  std::vector<double> sorted = projections;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  for (std::size_t j = 0; j < slice.size(); ++j) {
    if (projections[j] < median) {
      regions.side_1.push_back(slice[j]);
    } else if (projections[j] > median) {
      regions.side_2.push_back(slice[j]);
    }
  }
  if (regions.side_1.empty() || regions.side_2.empty()) {
    throw Error(ErrorCode::OneSidedSlice, "slice does not expose two opposing sides (" +
                                              std::to_string(regions.side_1.size()) + " / " +
                                              std::to_string(regions.side_2.size()) + " points)");
  }
  return regions;
}

ScoreTerms score_contact_pair(const ContactPoint& a, const ContactPoint& b, const GripperSpec& gripper,
                              const GraspingPlane& plane, const ScoreWeights& weights) {
  ScoreTerms terms;
  const Eigen::Vector3d line = b.position - a.position;
  const double opening = line.norm();
  if (!(opening > 0.0) || opening < gripper.min_opening || opening > gripper.max_opening) return terms;
  const Eigen::Vector3d direction = line / opening;

  // atan2 keeps the angle well conditioned near 0 and pi.
  const Eigen::Vector3d opposed = -b.normal;
  const double angle = std::atan2(a.normal.cross(opposed).norm(), a.normal.dot(opposed));
  const double opposition = 1.0 - angle / std::numbers::pi;
  const double alignment = 0.5 * (std::abs(a.normal.dot(direction)) + std::abs(b.normal.dot(direction)));
  terms.antipodality = 0.5 * (opposition + alignment);

  const double mean_variation = 0.5 * (a.surface_variation + b.surface_variation);
  terms.flatness = std::clamp(1.0 - 3.0 * mean_variation, 0.0, 1.0);

  const double mean_distance = 0.5 * (plane.distance(a.position) + plane.distance(b.position));
  terms.plane_proximity = std::clamp(1.0 - mean_distance / plane.epsilon, 0.0, 1.0);

  terms.score = std::clamp(weights.antipodality * terms.antipodality + weights.flatness * terms.flatness +
                               weights.plane_proximity * terms.plane_proximity,
                           0.0, 1.0);
  terms.feasible = true;
  return terms;
}

namespace {

std::vector<std::size_t> nearest_to_plane(std::vector<std::size_t> side, const PointCloud& cloud,
                                          const GraspingPlane& plane, std::size_t cap) {
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(side.size());
  for (std::size_t i : side) keyed.emplace_back(plane.distance(cloud.points[i]), i);
  std::sort(keyed.begin(), keyed.end());
  if (keyed.size() > cap) keyed.resize(cap);
  side.clear();
  for (const auto& [distance, i] : keyed) side.push_back(i);
  return side;
}

}  // namespace

GraspReport compute_best_grasp(const PointCloud& cloud, const GripperSpec& gripper, const GraspConfig& config) {
  gripper.validate();
  config.validate();
  if (cloud.size() < config.min_points) {
    throw Error(ErrorCode::InsufficientCloud, "cloud has " + std::to_string(cloud.size()) +
                                                  " points, need at least " +
                                                  std::to_string(config.min_points));
  }
  if (!cloud.has_normals()) {
    throw Error(ErrorCode::PreconditionViolation, "grasp synthesis needs a cloud with normals");
  }
  cloud.check_consistent();

  const PrincipalAxes axes = centroid_and_principal_axes(cloud);
  const GraspingPlane plane{axes.centroid, axes.axes.col(0), config.slice_epsilon};
  const std::vector<std::size_t> slice = slice_indices(cloud, plane);

  Eigen::Vector3d view_axis = axes.centroid - cloud.viewpoint;
  if (view_axis.norm() == 0.0) {
    throw Error(ErrorCode::DegenerateCloud, "viewpoint coincides with the cloud centroid");
  }
  view_axis.normalize();
  const OpposingRegions regions = split_opposing_regions(slice, cloud, view_axis, plane.normal);
  const std::vector<std::size_t> side_1 = nearest_to_plane(regions.side_1, cloud, plane, config.side_cap);
  const std::vector<std::size_t> side_2 = nearest_to_plane(regions.side_2, cloud, plane, config.side_cap);

  const SpatialIndex index(cloud.points);
  const std::size_t k = std::min(config.curvature_k, cloud.size());
  auto contact = [&](std::size_t i) {
    return ContactPoint{i, cloud.points[i], cloud.normals[i], surface_variation(cloud, index, i, k)};
  };
  std::vector<ContactPoint> contacts_1;
  std::vector<ContactPoint> contacts_2;
  for (std::size_t i : side_1) contacts_1.push_back(contact(i));
  for (std::size_t i : side_2) contacts_2.push_back(contact(i));

  GraspReport report;
  report.plane = plane;
  report.flags.point_count = cloud.size();
  for (const ContactPoint& p : contacts_1) {
    for (const ContactPoint& q : contacts_2) {
      const ScoreTerms terms = score_contact_pair(p, q, gripper, plane, config.weights);
      if (!terms.feasible || terms.score < config.score_floor) continue;
      const ContactPoint& a = p.index < q.index ? p : q;
      const ContactPoint& b = p.index < q.index ? q : p;
      GraspCandidate candidate;
      candidate.index_a = a.index;
      candidate.index_b = b.index;
      candidate.contact_a = a.position;
      candidate.contact_b = b.position;
      candidate.normal_a = a.normal;
      candidate.normal_b = b.normal;
      candidate.score = terms.score;
      candidate.opening = (b.position - a.position).norm();
      const Eigen::Vector3d midpoint = 0.5 * (a.position + b.position);
      candidate.approach = (midpoint - cloud.viewpoint).normalized();
      report.candidates.push_back(candidate);
    }
  }
  if (report.candidates.empty()) {
    throw Error(ErrorCode::NoFeasibleGrasp, "no contact pair within the gripper limits clears score floor " +
                                                std::to_string(config.score_floor));
  }
  std::sort(report.candidates.begin(), report.candidates.end(),
            [](const GraspCandidate& x, const GraspCandidate& y) {
              if (x.score != y.score) return x.score > y.score;
              if (x.index_a != y.index_a) return x.index_a < y.index_a;
              return x.index_b < y.index_b;
            });
  if (config.max_candidates > 0 && report.candidates.size() > config.max_candidates) {
    report.candidates.resize(config.max_candidates);
  }
  return report;
}

}  // namespace wastegrasp
