#include "precopt/matcalc.hpp"

#include <cmath>
#include <stdexcept>

namespace precopt {

Eigen::MatrixXd SvdFactors::reconstruct() const {
  const int k = static_cast<int>(singvals.size());
  return u.leftCols(k) * singvals.asDiagonal() * v.leftCols(k).transpose();
}

SvdFactors svd_factors(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return SvdFactors{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Eigen::VectorXd vec(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

Eigen::VectorXd vech(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  Eigen::VectorXd out(n * (n + 1) / 2);
  int idx = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) out(idx++) = m(i, j);
  return out;
}

Eigen::MatrixXd unvech(const Eigen::VectorXd& v, int n) {
  if (v.size() != n * (n + 1) / 2) throw std::invalid_argument("unvech: length mismatch");
  Eigen::MatrixXd out(n, n);
  int idx = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      out(i, j) = v(idx);
      out(j, i) = v(idx);
      ++idx;
    }
  return out;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::MatrixXd duplication_matrix(int n) {
  if (n < 1) throw std::invalid_argument("duplication_matrix: n >= 1 required");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n * n, n * (n + 1) / 2);
  int col = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      d(j * n + i, col) = 1.0;
      d(i * n + j, col) = 1.0;
      ++col;
    }
  return d;
}

Eigen::MatrixXd symmetrizer_matrix(int n) {
  if (n < 1) throw std::invalid_argument("symmetrizer_matrix: n >= 1 required");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n * n, n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      s(j * n + i, j * n + i) += 0.5;
      s(i * n + j, j * n + i) += 0.5;
    }
  return s;
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& m, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("pinv: tol must be positive");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? tol * s(0) : 0.0;
  Eigen::VectorXd sinv = Eigen::VectorXd::Zero(s.size());
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) sinv(i) = 1.0 / s(i);
  return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::MatrixXd omega_matrix(const SvdFactors& svd, int n) {
  if (svd.singvals.size() != n || svd.u.cols() < n || svd.v.cols() < n)
    throw std::invalid_argument("omega_matrix: square n x n factors required");
  const Eigen::VectorXd& s = svd.singvals;
  const Eigen::MatrixXd v = svd.v.leftCols(n);
  const double smax = s.size() > 0 ? s(0) : 0.0;
  const double gap_tol = 1e-8 * std::max(1.0, smax);

  Eigen::MatrixXd omega(n * n, n * n);
  for (int i = 0; i < n; ++i) {
    // entrywise pseudoinverse of the diagonal gap matrix s_i^2 I - S^2
    Eigen::VectorXd ginv = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (std::abs(s(i) - s(j)) > gap_tol) ginv(j) = 1.0 / (s(i) * s(i) - s(j) * s(j));
    }
    const Eigen::MatrixXd block = v * ginv.asDiagonal() * v.transpose();
    omega.middleRows(i * n, n) = kron(v.col(i).transpose(), block);
  }
  return omega;
}

}  // namespace precopt
