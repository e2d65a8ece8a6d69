#pragma once

#include <Eigen/Dense>

#include "precopt/channel.hpp"
#include "precopt/estimator.hpp"

namespace precopt {

// Jacobian of the mutual information in the transmit covariance Q = P P^T,
// reported against vech(Q) (duplication-reduced coordinates); multiply by
// pinv(duplication_matrix(n)) from the right for full vec coordinates. It is
// the partial derivative at a fixed right singular factor, in the (Q, V_P)
// parametrization of the precoder.
struct QJacobian {
  Eigen::RowVectorXd row;   // length n(n+1)/2
  Eigen::MatrixXd p;        // evaluation point
  Eigen::MatrixXd e_s;
};

// Valid for square invertible P with n = m = p. Uses the precoder's stored
// SVD factors.
QJacobian dq_mutual_information(const Channel& ch, const Precoder& prec,
                                const Eigen::MatrixXd& e_s);

/// Analytic vech-Jacobian of the Gaussian closed form (1/2) log det(I + Q R).
Eigen::RowVectorXd gaussian_q_jacobian(const Eigen::MatrixXd& q, const Eigen::MatrixXd& gram);

/// Central difference [I(P + h D) - I(P - h D)] / 2h with common random numbers.
double fd_directional_mi(const Channel& ch, const Precoder& prec, const Eigen::MatrixXd& delta,
                         const Constellation& c, const IntegrationConfig& cfg, double h);

// Smooth selection P(Q) = U(Q) S(Q) V^T at fixed right factor: eigenvectors
// of Q ordered nonincreasing and sign-matched to u_ref. Requires a clear
// eigenvalue separation; used by the finite-difference consistency checks.
Eigen::MatrixXd precoder_from_covariance(const Eigen::MatrixXd& q, const Eigen::MatrixXd& v_fixed,
                                         const Eigen::MatrixXd& u_ref);

}  // namespace precopt
