#pragma once

#include <Eigen/Dense>

namespace wastegrasp {

/// Eigen-decomposition of a symmetric 3x3 matrix.
/// `values` are sorted descending; `vectors.col(i)` pairs with `values[i]`
/// and the columns form a right-handed orthonormal basis.
struct SymmetricEigen3 {
  Eigen::Vector3d values;
  Eigen::Matrix3d vectors;
  bool used_jacobi = false;
};

/// Closed-form (trigonometric) eigenvalues. The most isolated eigenvalue
/// gets a cross-product eigenvector and the remaining pair is solved on its
/// orthogonal complement. Falls back to cyclic Jacobi when two
/// eigenvalues are closer than `relative_gap` times the spectral radius.
SymmetricEigen3 eigen_symmetric3(const Eigen::Matrix3d& a, double relative_gap = 1e-6);

/// Cyclic Jacobi rotations until the off-diagonal mass vanishes.
SymmetricEigen3 jacobi_symmetric3(const Eigen::Matrix3d& a);

}  // namespace wastegrasp
