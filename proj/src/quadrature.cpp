#include "precopt/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace precopt {

GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n >= 1 required");
  // Jacobi matrix of the (physicists') Hermite recurrence: off-diagonal
  // entries sqrt(k/2).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(k / 2.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  GaussHermiteRule rule;
  rule.nodes = es.eigenvalues() * std::sqrt(2.0);
  // weight_i = first eigenvector component squared (the sqrt(pi) total mass
  // cancels against the normal-density normalization)
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double c = es.eigenvectors()(0, i);
    rule.weights(i) = c * c;
  }
  return rule;
}

QuadratureGrid tensor_gauss_hermite(int dims, int nodes_per_dim) {
  if (dims < 1) throw std::invalid_argument("tensor_gauss_hermite: dims >= 1 required");
  const GaussHermiteRule rule = gauss_hermite(nodes_per_dim);
  long total = 1;
  for (int d = 0; d < dims; ++d) total *= nodes_per_dim;

  QuadratureGrid grid;
  grid.points.resize(dims, total);
  grid.weights.resize(total);
  std::vector<int> counter(dims, 0);
  for (long t = 0; t < total; ++t) {
    double w = 1.0;
    for (int d = 0; d < dims; ++d) {
      grid.points(d, t) = rule.nodes(counter[d]);
      w *= rule.weights(counter[d]);
    }
    grid.weights(t) = w;
    for (int d = 0; d < dims; ++d) {
      if (++counter[d] < nodes_per_dim) break;
      counter[d] = 0;
    }
  }
  return grid;
}

}  // namespace precopt
