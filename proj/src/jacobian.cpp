#include "precopt/jacobian.hpp"

#include <cmath>

#include "precopt/infomeasures.hpp"
#include "precopt/matcalc.hpp"

namespace precopt {

QJacobian dq_mutual_information(const Channel& ch, const Precoder& prec,
                                const Eigen::MatrixXd& e_s) {
  const int n = prec.out_dims();
  if (prec.in_dims() != n || ch.tx_dims() != n || ch.rx_dims() != n)
    throw std::invalid_argument("dq_mutual_information: square n = m = p model required");
  if (e_s.rows() != n || e_s.cols() != n)
    throw std::invalid_argument("dq_mutual_information: MMSE matrix shape mismatch");
  const Eigen::VectorXd& s = prec.svd.singvals;
  if (s(n - 1) <= 0 || s(0) / s(n - 1) >= 1e8)
    throw std::invalid_argument("dq_mutual_information: precoder singular or ill-conditioned");

  const Eigen::MatrixXd p_inv = prec.p.fullPivLu().inverse();
  const Eigen::MatrixXd dn = duplication_matrix(n);
  const Eigen::MatrixXd nn = symmetrizer_matrix(n);
  const Eigen::MatrixXd omega = omega_matrix(prec.svd, n);
  const Eigen::MatrixXd u = prec.svd.u.leftCols(n);
  const Eigen::MatrixXd v = prec.svd.v.leftCols(n);

  const Eigen::RowVectorXd term1 =
      0.5 * vec(ch.gram * prec.p * e_s * p_inv).transpose() * dn;
  const Eigen::RowVectorXd term2 =
      vec(e_s * prec.p.transpose() * ch.gram * u * s.asDiagonal()).transpose() * omega * nn *
      kron(p_inv, prec.p.transpose()) * dn;

  QJacobian out;
  out.row = term1 - term2;
  out.p = prec.p;
  out.e_s = e_s;
  return out;
}

Eigen::RowVectorXd gaussian_q_jacobian(const Eigen::MatrixXd& q, const Eigen::MatrixXd& gram) {
  const int n = static_cast<int>(q.rows());
  const Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(n, n) + q * gram;
  const Eigen::MatrixXd a = gram * inner.fullPivLu().inverse();
  return 0.5 * vec(a).transpose() * duplication_matrix(n);
}

double fd_directional_mi(const Channel& ch, const Precoder& prec, const Eigen::MatrixXd& delta,
                         const Constellation& c, const IntegrationConfig& cfg, double h) {
  if (h < 1e-5 || h > 1e-2)
    throw std::invalid_argument("fd_directional_mi: h must lie in [1e-5, 1e-2]");
  if (delta.rows() != prec.out_dims() || delta.cols() != prec.in_dims())
    throw std::invalid_argument("fd_directional_mi: direction shape mismatch");
  const double up = mi_discrete(ch.h * (prec.p + h * delta), c, cfg).nats;
  const double dn = mi_discrete(ch.h * (prec.p - h * delta), c, cfg).nats;
  return (up - dn) / (2.0 * h);
}

Eigen::MatrixXd precoder_from_covariance(const Eigen::MatrixXd& q, const Eigen::MatrixXd& v_fixed,
                                         const Eigen::MatrixXd& u_ref) {
  const int n = static_cast<int>(q.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
  Eigen::MatrixXd u(n, n);
  Eigen::VectorXd vals(n);
  for (int j = 0; j < n; ++j) {  // flip to nonincreasing order
    u.col(j) = es.eigenvectors().col(n - 1 - j);
    vals(j) = std::max(0.0, es.eigenvalues()(n - 1 - j));
  }
  for (int j = 0; j < n; ++j) {
    const double d = u.col(j).dot(u_ref.col(j));
    if (std::abs(d) < 0.9)
      throw std::invalid_argument("precoder_from_covariance: eigenbasis drifted from reference");
    if (d < 0) u.col(j) = -u.col(j);
  }
  return u * vals.cwiseSqrt().asDiagonal() * v_fixed.transpose();
}

}  // namespace precopt
