#pragma once

#include <Eigen/Dense>

namespace precopt {

// Full SVD factors, singular values nonincreasing. `u` and `v` carry at
// least singvals.size() orthonormal columns; reconstruction uses the
// leading ones.
struct SvdFactors {
  Eigen::MatrixXd u;
  Eigen::VectorXd singvals;
  Eigen::MatrixXd v;

  Eigen::MatrixXd reconstruct() const;
};

SvdFactors svd_factors(const Eigen::MatrixXd& m);

/// Column-stacking of a matrix.
Eigen::VectorXd vec(const Eigen::MatrixXd& m);

/// Lower triangle (diagonal included), stacked column by column.
Eigen::VectorXd vech(const Eigen::MatrixXd& m);

/// Symmetric matrix with vech(result) = v.
Eigen::MatrixXd unvech(const Eigen::VectorXd& v, int n);

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// D_n (n^2 x n(n+1)/2): D_n * vech(A) = vec(A) for symmetric A.
Eigen::MatrixXd duplication_matrix(int n);

// N_n (n^2 x n^2): N_n * vec(A) = vec((A + A^T)/2).
Eigen::MatrixXd symmetrizer_matrix(int n);

// Moore-Penrose pseudoinverse; singular values below tol * sigma_max are
// treated as zero.
Eigen::MatrixXd pinv(const Eigen::MatrixXd& m, double tol = 1e-10);

// Stack of n blocks v_i^T (x) [V (s_i^2 I - S^2)^+ V^T] built from the SVD
// factors of a square n x n matrix. Singular values closer than 1e-8
// (relative) are treated as coincident, which zeroes the corresponding
// inverse gaps.
Eigen::MatrixXd omega_matrix(const SvdFactors& svd, int n);

}  // namespace precopt
