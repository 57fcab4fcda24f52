#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "wastegrasp/cloud_processing.hpp"
#include "wastegrasp/error.hpp"
#include "wastegrasp/grasp_synthesis.hpp"

using namespace wastegrasp;
using namespace wastegrasp::testing;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

PointCloud conditioned(const PointCloud& raw) {
  return estimate_normals(remove_statistical_outliers(voxel_downsample(raw, 0.005), 16, 1.0), 16);
}

PointCloud cylinder_cloud(std::uint64_t seed, const CylinderSpec& cyl = {}) {
  Rng rng(seed);
  return conditioned(sample_cylinder_view(cyl, 20000, 0.001, rng));
}

ContactPoint contact(const Eigen::Vector3d& p, const Eigen::Vector3d& n, std::size_t index = 0) {
  return ContactPoint{index, p, n.normalized(), 0.0};
}

}  // namespace

TEST_CASE("grasping plane slice") {
  const PointCloud cyl = cylinder_cloud(1);
  const GraspingPlane plane = grasping_plane(cyl, 0.005);
  CHECK(std::abs(plane.normal.y()) > 0.99);
  const auto slice = grasping_plane_slice(cyl, 0.005);
  CHECK_FALSE(slice.empty());
  CHECK(std::is_sorted(slice.begin(), slice.end()));
  for (std::size_t i : slice) CHECK(plane.distance(cyl.points[i]) <= 0.005);
  std::size_t expected = 0;
  for (const auto& p : cyl.points)
    if (plane.distance(p) <= 0.005) ++expected;
  CHECK(slice.size() == expected);

  CHECK(grasping_plane_slice(cyl, 0.2).size() == cyl.size());

  PointCloud two;
  two.points = {{0, 0, 1}, {0.1, 0, 1}};
  CHECK(code_of([&] { grasping_plane_slice(two, 0.005); }) == ErrorCode::DegenerateCloud);
}

TEST_CASE("opposing regions") {
  const PointCloud cyl = cylinder_cloud(2);
  const GraspingPlane plane = grasping_plane(cyl, 0.005);
  const auto slice = grasping_plane_slice(cyl, 0.005);
  const Eigen::Vector3d view = (plane.origin - cyl.viewpoint).normalized();
  const OpposingRegions regions = split_opposing_regions(slice, cyl, view, plane.normal);
  CHECK(regions.side_1.size() >= slice.size() / 4);
  CHECK(regions.side_2.size() >= slice.size() / 4);
  CHECK(regions.side_1.size() + regions.side_2.size() <= slice.size());
  const auto diff = static_cast<long>(regions.side_1.size()) - static_cast<long>(regions.side_2.size());
  CHECK(std::abs(diff) <= 1);
  double max_1 = -1e9, min_2 = 1e9;
  for (std::size_t i : regions.side_1) max_1 = std::max(max_1, regions.lateral.dot(cyl.points[i]));
  for (std::size_t i : regions.side_2) min_2 = std::min(min_2, regions.lateral.dot(cyl.points[i]));
  CHECK(max_1 < min_2);

  const std::vector<std::size_t> one{slice.front()};
  CHECK(code_of([&] { split_opposing_regions(one, cyl, view, plane.normal); }) == ErrorCode::OneSidedSlice);
  CHECK(code_of([&] { split_opposing_regions(slice, cyl, plane.normal, plane.normal); }) ==
        ErrorCode::OneSidedSlice);
}

TEST_CASE("contact pair scoring") {
  GraspingPlane plane;
  plane.origin = {0, 0, 0.5};
  plane.normal = Eigen::Vector3d::UnitY();
  const GripperSpec gripper;
  const ScoreWeights weights;

  const ContactPoint a = contact({-0.03, 0, 0.5}, {-1, 0, 0}, 0);
  const ContactPoint b = contact({0.03, 0, 0.5}, {1, 0, 0}, 1);
  const ScoreTerms good = score_contact_pair(a, b, gripper, plane, weights);
  CHECK(good.feasible);
  CHECK(good.score > 0.8);
  CHECK(good.antipodality == doctest::Approx(1.0));
  CHECK(good.score == doctest::Approx(1.0));
  CHECK(score_contact_pair(b, a, gripper, plane, weights).score == good.score);

  const ContactPoint far_a = contact({-0.05, 0, 0.5}, {-1, 0, 0});
  const ContactPoint far_b = contact({0.05, 0, 0.5}, {1, 0, 0});
  const ScoreTerms wide = score_contact_pair(far_a, far_b, gripper, plane, weights);
  CHECK_FALSE(wide.feasible);
  CHECK(wide.score == 0.0);

  // Same face, same outward normal: the contact line lies in the face.
  const ContactPoint same = contact({-0.03, 0, 0.52}, {-1, 0, 0});
  const ScoreTerms parallel = score_contact_pair(a, same, gripper, plane, weights);
  CHECK(parallel.antipodality < 0.5);

  // Off-plane contacts lose proximity; curved patches lose flatness.
  ContactPoint off = contact({0.03, 0.004, 0.5}, {1, 0, 0});
  CHECK(score_contact_pair(a, off, gripper, plane, weights).plane_proximity < good.plane_proximity);
  off.position.y() = 0.0;
  off.surface_variation = 0.2;
  CHECK(score_contact_pair(a, off, gripper, plane, weights).flatness < good.flatness);

  ScoreWeights bad;
  bad.antipodality = 0.9;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("best grasp on a cylinder") {
  const PointCloud cyl = cylinder_cloud(3);
  const GraspReport report = compute_best_grasp(cyl, GripperSpec{});
  REQUIRE_FALSE(report.candidates.empty());
  const GraspCandidate& best = report.candidates.front();
  CHECK(best.opening >= 0.055);
  CHECK(best.opening <= 0.065);
  CHECK(degrees_from_perpendicular(best.contact_b - best.contact_a, Eigen::Vector3d::UnitY()) <= 15.0);
  CHECK(best.index_a < best.index_b);
  CHECK(best.contact_a == cyl.points[best.index_a]);
  CHECK(report.flags.point_count == cyl.size());
  CHECK(report.candidates.size() <= GraspConfig{}.max_candidates);
  for (std::size_t i = 1; i < report.candidates.size(); ++i) {
    const auto& p = report.candidates[i - 1];
    const auto& q = report.candidates[i];
    CHECK((p.score > q.score || (p.score == q.score && std::pair(p.index_a, p.index_b) < std::pair(q.index_a, q.index_b))));
  }
  for (const auto& c : report.candidates) {
    CHECK(c.score >= 0.3);
    CHECK(c.opening <= 0.08);
    CHECK(report.plane.distance(c.contact_a) <= report.plane.epsilon);
    CHECK(std::abs(c.approach.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("grasp failure modes") {
  Rng rng(4);
  PointCloud box = sample_wide_box_faces();
  box = estimate_normals(box, 16);
  CHECK(code_of([&] { compute_best_grasp(box, GripperSpec{}); }) == ErrorCode::NoFeasibleGrasp);

  PointCloud small = sample_cylinder_view(CylinderSpec{}, 50, 0.0, rng);
  small = estimate_normals(small, 16);
  CHECK(code_of([&] { compute_best_grasp(small, GripperSpec{}); }) == ErrorCode::InsufficientCloud);

  PointCloud bare = sample_cylinder_view(CylinderSpec{}, 500, 0.0, rng);
  CHECK(code_of([&] { compute_best_grasp(bare, GripperSpec{}); }) == ErrorCode::PreconditionViolation);
}

TEST_CASE("grasp invariants") {
  const PointCloud cyl = cylinder_cloud(5);

  SUBCASE("deterministic") {
    const GraspReport a = compute_best_grasp(cyl, GripperSpec{});
    const GraspReport b = compute_best_grasp(cyl, GripperSpec{});
    REQUIRE(a.candidates.size() == b.candidates.size());
    for (std::size_t i = 0; i < a.candidates.size(); ++i) {
      CHECK(a.candidates[i].index_a == b.candidates[i].index_a);
      CHECK(a.candidates[i].index_b == b.candidates[i].index_b);
      CHECK(a.candidates[i].score == b.candidates[i].score);
    }
  }

  SUBCASE("opening bounds and membership") {
    GripperSpec narrow;
    narrow.max_opening = 0.062;
    narrow.min_opening = 0.04;
    const GraspReport r = compute_best_grasp(cyl, narrow);
    for (const auto& c : r.candidates) {
      CHECK(c.opening >= 0.04);
      CHECK(c.opening <= 0.062);
      CHECK(c.index_b < cyl.size());
      CHECK(c.contact_b == cyl.points[c.index_b]);
    }
  }

  SUBCASE("larger max opening never lowers the best score") {
    double previous = 0.0;
    for (double max_opening : {0.05, 0.058, 0.062, 0.07, 0.1}) {
      GripperSpec g;
      g.max_opening = max_opening;
      GraspConfig cfg;
      cfg.score_floor = 0.0;
      double best = 0.0;
      try {
        best = compute_best_grasp(cyl, g, cfg).candidates.front().score;
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoFeasibleGrasp);
      }
      CHECK(best >= previous);
      previous = best;
    }
  }

  SUBCASE("uniform scale keeps the contacts") {
    const double s = 2.0;
    PointCloud scaled = cyl;
    for (auto& p : scaled.points) p *= s;
    GripperSpec g;
    g.max_opening *= s;
    GraspConfig cfg;
    cfg.slice_epsilon *= s;
    const GraspReport a = compute_best_grasp(cyl, GripperSpec{});
    const GraspReport b = compute_best_grasp(scaled, g, cfg);
    REQUIRE(a.candidates.size() == b.candidates.size());
    CHECK(a.candidates.front().index_a == b.candidates.front().index_a);
    CHECK(a.candidates.front().index_b == b.candidates.front().index_b);
    CHECK(b.candidates.front().opening == doctest::Approx(s * a.candidates.front().opening));
    CHECK(b.candidates.front().score == doctest::Approx(a.candidates.front().score).epsilon(1e-9));
  }
}
