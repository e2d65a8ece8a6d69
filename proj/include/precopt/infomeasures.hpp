#pragma once

#include <Eigen/Dense>

#include "precopt/channel.hpp"
#include "precopt/estimator.hpp"

namespace precopt {

enum class MiMethod { gaussian_closed_form, low_snr_closed_form, discrete_mc, discrete_quadrature };

// Mutual information in nats. stderr is zero for closed forms and
// quadrature.
struct MiEstimate {
  double nats = 0.0;
  double stderr_ = 0.0;
  MiMethod method = MiMethod::gaussian_closed_form;

  double bits() const;
};

// True derivative scale of the mutual information in the squared singular
// values: dI/d(sigma_i^2) = kMiSigmaSqDerivativeScale * lam_i^2 * mmse_i.
// Pinned program-wide by a finite-difference test; the KKT stationarity
// condition lam_i^2 mmse_i = 2 eta is insensitive to it.
inline constexpr double kMiSigmaSqDerivativeScale = 0.5;

/// Gaussian-input closed form (1/2) log det(I + Q R) for Q = P P^T, R = H^T H.
MiEstimate mi_gaussian(const Eigen::MatrixXd& q, const Eigen::MatrixXd& gram);

/// Numerical I(s; y) for y = G s + z, z ~ N(0, I), discrete input.
MiEstimate mi_discrete(const Eigen::MatrixXd& g, const Constellation& c,
                       const IntegrationConfig& cfg);

// I(s; t) for t = A s + w with w ~ N(0, W), W PSD. Whitens on the range of
// W; throws if the signal has a component outside that range.
MiEstimate mi_discrete_colored(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w,
                               const Constellation& c, const IntegrationConfig& cfg);

/// First-order expansion (1/2) Tr(Q R); valid for rho * lam_max <= 0.01.
MiEstimate mi_low_snr(const Eigen::MatrixXd& q, const Eigen::MatrixXd& gram);

// Gradient-shaped vector lam_i^2 * mmse_i(Sigma, V) over the powered modes;
// multiply by kMiSigmaSqDerivativeScale for the actual derivative.
Eigen::VectorXd mi_gradient_sigma_sq(const Eigen::VectorXd& lam_sq,
                                     const Eigen::VectorXd& sigma_sq, const Eigen::MatrixXd& v,
                                     const Constellation& c, const IntegrationConfig& cfg);

}  // namespace precopt
