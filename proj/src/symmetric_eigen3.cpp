#include "wastegrasp/symmetric_eigen3.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace wastegrasp {

namespace {

void sort_descending_right_handed(SymmetricEigen3& result) {
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return result.values[a] > result.values[b]; });
  const Eigen::Vector3d values = result.values;
  const Eigen::Matrix3d vectors = result.vectors;
  for (int i = 0; i < 3; ++i) {
    result.values[i] = values[order[i]];
    result.vectors.col(i) = vectors.col(order[i]);
  }
  result.vectors.col(2) = result.vectors.col(0).cross(result.vectors.col(1)).normalized();
}

// Null vector of (a - lambda I) from the best-conditioned cross product of its rows.
Eigen::Vector3d null_vector(const Eigen::Matrix3d& a, double lambda) {
  const Eigen::Matrix3d m = a - lambda * Eigen::Matrix3d::Identity();
  const Eigen::Vector3d r0 = m.row(0);
  const Eigen::Vector3d r1 = m.row(1);
  const Eigen::Vector3d r2 = m.row(2);
  const std::array<Eigen::Vector3d, 3> candidates = {r0.cross(r1), r0.cross(r2), r1.cross(r2)};
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (candidates[i].squaredNorm() > candidates[best].squaredNorm()) best = i;
  }
  return candidates[best].normalized();
}

}  // namespace

SymmetricEigen3 jacobi_symmetric3(const Eigen::Matrix3d& input) {
  Eigen::Matrix3d a = 0.5 * (input + input.transpose());
  Eigen::Matrix3d v = Eigen::Matrix3d::Identity();
  const double scale = a.cwiseAbs().maxCoeff();

  for (int sweep = 0; sweep < 64; ++sweep) {
    const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    if (off <= 1e-40 * scale * scale || off == 0.0) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
        rotation(p, p) = c;
        rotation(q, q) = c;
        rotation(p, q) = s;
        rotation(q, p) = -s;
        a = rotation.transpose() * a * rotation;
        a(p, q) = a(q, p) = 0.0;
        v = v * rotation;
      }
    }
  }

  SymmetricEigen3 result;
  result.values = a.diagonal();
  result.vectors = v;
  result.used_jacobi = true;
  sort_descending_right_handed(result);
  return result;
}

SymmetricEigen3 eigen_symmetric3(const Eigen::Matrix3d& input, double relative_gap) {
  const Eigen::Matrix3d a = 0.5 * (input + input.transpose());
  const double q = a.trace() / 3.0;
  const Eigen::Matrix3d shifted = a - q * Eigen::Matrix3d::Identity();
  const double p = std::sqrt(shifted.squaredNorm() / 6.0);
  if (p == 0.0) return jacobi_symmetric3(a);

  const Eigen::Matrix3d b = shifted / p;
  const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  SymmetricEigen3 result;
  const double largest = q + 2.0 * p * std::cos(phi);
  const double smallest = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  result.values = {largest, 3.0 * q - largest - smallest, smallest};

  // Only the most isolated eigenvalue gets a cross-product eigenvector; the
  // other pair comes from the 2x2 block on its orthogonal complement, which
  // stays accurate however close the pair is.
  const double radius = std::max(std::abs(result.values[0]), std::abs(result.values[2]));
  const double gap_hi = result.values[0] - result.values[1];
  const double gap_lo = result.values[1] - result.values[2];
  const int isolated = gap_hi >= gap_lo ? 0 : 2;
  if (std::min(gap_hi, gap_lo) < relative_gap * radius) return jacobi_symmetric3(a);

  const Eigen::Vector3d v = null_vector(a, result.values[isolated]);
  Eigen::Index least = 0;
  v.cwiseAbs().minCoeff(&least);
  const Eigen::Vector3d u1 = v.cross(Eigen::Vector3d::Unit(least)).normalized();
  const Eigen::Vector3d u2 = v.cross(u1);
  const double b11 = u1.dot(a * u1);
  const double b12 = u1.dot(a * u2);
  const double b22 = u2.dot(a * u2);
  const double mean = 0.5 * (b11 + b22);
  const double half = std::hypot(0.5 * (b11 - b22), b12);
  const double theta = 0.5 * std::atan2(2.0 * b12, b11 - b22);
  const Eigen::Vector3d w_hi = std::cos(theta) * u1 + std::sin(theta) * u2;
  const Eigen::Vector3d w_lo = -std::sin(theta) * u1 + std::cos(theta) * u2;

  if (isolated == 0) {
    result.values = {v.dot(a * v), mean + half, mean - half};
    result.vectors.col(0) = v;
    result.vectors.col(1) = w_hi;
  } else {
    result.values = {mean + half, mean - half, v.dot(a * v)};
    result.vectors.col(0) = w_hi;
    result.vectors.col(1) = w_lo;
  }
  result.vectors.col(2) = result.vectors.col(0).cross(result.vectors.col(1));
  return result;
}

}  // namespace wastegrasp
