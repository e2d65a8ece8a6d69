#pragma once

#include <Eigen/Core>

namespace precopt {

// Nodes and weights for E[f(z)], z ~ N(0, 1):  E[f] = sum_i w_i f(x_i).
// The sqrt(2) node scaling and 1/sqrt(pi) weight normalization are already
// applied.
struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Golub-Welsch on the Hermite Jacobi matrix.
GaussHermiteRule gauss_hermite(int n);

// Tensor-product grid over `dims` i.i.d. standard normal dimensions.
// points is dims x (n^dims).
struct QuadratureGrid {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;
};

QuadratureGrid tensor_gauss_hermite(int dims, int nodes_per_dim);

}  // namespace precopt
