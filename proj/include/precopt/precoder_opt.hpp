#pragma once

#include <vector>

#include <Eigen/Dense>

#include "precopt/channel.hpp"
#include "precopt/estimator.hpp"
#include "precopt/infomeasures.hpp"

namespace precopt {

// Stationarity report for the power allocation: active modes satisfy
// lam_i^2 mmse_i = 2 eta, inactive ones the strict inequality. residuals
// holds lam_i^2 mmse_i - 2 eta for every mode (negative slack on inactive
// ones).
struct KktReport {
  double eta = 0.0;
  std::vector<int> active;
  Eigen::VectorXd residuals;
  int iterations = 0;
  bool converged = false;
};

struct PrecoderSolution {
  Precoder precoder;
  MiEstimate mi;
  KktReport kkt;
  std::vector<double> vp_trace;  // objective after each accepted outer step
};

/// First k columns of U_H (eigenvalues nonincreasing, stable ties).
Eigen::MatrixXd align_left_singvecs(const Channel& ch, int k);

// Gram-preserving realignment: returns P~ with P~^T R_H P~ = P^T R_H P and
// Tr(P~ P~^T) <= Tr(P P^T), built by re-expressing the Gram in the channel
// eigenbasis with the greedy largest-to-largest mode pairing.
Precoder align_improvement(const Channel& ch, const Precoder& p_any);

struct PowerAllocOptions {
  double tol_kkt = 1e-5;   // on normalized residuals lam^2 mmse / (2 eta) - 1
  int max_iter = 200;
  int max_backtracks = 30;
  int polish_steps = 2;    // extra full Newton steps after reaching tol
};

struct PowerAlloc {
  Eigen::VectorXd sigma_sq;
  KktReport report;
};

// Damped active-set Newton on the stationarity system; global optimum for a
// fixed right factor by concavity of the objective in the squared singular
// values.
PowerAlloc solve_kkt_power(const Eigen::VectorXd& lam_sq, const MmseModel& model, double rho,
                           const PowerAllocOptions& opts = {});

/// Discrete-alphabet wrapper over solve_kkt_power (modes k = min(p, m)).
PowerAlloc opt_power_alloc(const Channel& ch, const Constellation& c, const Eigen::MatrixXd& v,
                           double rho, const IntegrationConfig& cfg,
                           const PowerAllocOptions& opts = {});

/// sigma_i^2 = max(0, mu - 1/lam_i^2) with the water level set by the budget.
Eigen::VectorXd waterfilling(const Eigen::VectorXd& lam_sq, double rho);

// Rank-one beamformer on the top channel eigenspace; power split uniformly
// across exactly-tied top eigenvalues. Square p x p precoder.
Precoder low_snr_precoder(const Channel& ch, double rho);

struct VSearchOptions {
  int max_outer = 12;
  int restarts = 6;
  double step_init = 0.5;
  int max_line_search = 20;
  double improve_tol = 1e-9;  // nats; stop when an outer sweep gains less
  std::uint64_t seed = 0;
  PowerAllocOptions power;
};

// Euclidean gradient of the mutual information in the right factor at fixed
// diagonal gains, for the model y' = G V^T s + z.
Eigen::MatrixXd vp_euclidean_gradient(const Eigen::VectorXd& lam_sq,
                                      const Eigen::VectorXd& sigma_sq, const Eigen::MatrixXd& v,
                                      const Eigen::MatrixXd& e_s);

/// Projection onto the tangent space of the orthogonal group at v.
Eigen::MatrixXd project_to_orthogonal_tangent(const Eigen::MatrixXd& v, const Eigen::MatrixXd& g);

/// QR retraction with positive-diagonal sign convention.
Eigen::MatrixXd qr_retract(const Eigen::MatrixXd& m);

// Alternating ascent: power allocation at fixed V, then a line-searched
// ascent step over the orthogonal group, best over restarts.
PrecoderSolution optimize_right_singvecs(const Channel& ch, const Constellation& c, double rho,
                                         const IntegrationConfig& cfg,
                                         const VSearchOptions& opts = {});

/// Full pipeline: alignment + power allocation + right-factor search.
PrecoderSolution max_performance(const Channel& ch, const Constellation& c, double rho,
                                 const IntegrationConfig& cfg, const VSearchOptions& opts = {});

/// Gaussian-signaling closed-form pipeline (waterfilling on the eigenmodes).
PrecoderSolution max_performance_gaussian(const Channel& ch, double rho, int m = -1);

}  // namespace precopt
