#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "precopt/channel.hpp"

namespace precopt {

// Contract for the numerical expectation over the Gaussian noise. The
// expectation over the alphabet is always the exact finite sum; only the
// noise integral is approximated. Monte Carlo uses common random numbers:
// the sample set depends on (seed, dims, samples) alone, so perturbed
// re-evaluations see identical noise.
struct IntegrationConfig {
  enum class Method { monte_carlo, gauss_hermite };
  Method method = Method::monte_carlo;
  int samples = 20000;      // Monte Carlo budget
  int nodes_per_dim = 20;   // Gauss-Hermite, noise dimension <= 4 only
  std::uint64_t seed = 0;
  std::optional<double> stderr_target;

  IntegrationConfig with_seed(std::uint64_t s) const {
    IntegrationConfig out = *this;
    out.seed = s;
    return out;
  }
};

struct IntegrationBudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Precomputed noise nodes for one model evaluation. deterministic == true
// for quadrature grids (zero standard error).
struct NoiseGrid {
  Eigen::MatrixXd points;   // dims x T
  Eigen::VectorXd weights;  // sums to 1
  bool deterministic = false;
  int batches = 1;
};

NoiseGrid make_noise_grid(int dims, const IntegrationConfig& cfg);

struct MmseStats {
  Eigen::MatrixXd mmse_matrix;  // E_s, m x m
  Eigen::VectorXd mmse_diag;
  Eigen::MatrixXd stderrs;      // per entry, zero for quadrature
};

struct PhiMoments {
  Eigen::MatrixXd phi_sq;   // E[Phi_ij^2]
  Eigen::MatrixXd stderrs;
};

/// Conditional mean E[s | y] for y = G s + z, z ~ N(0, I); log-domain weights.
Eigen::VectorXd posterior_mean(const Eigen::MatrixXd& g, const Constellation& c,
                               const Eigen::VectorXd& y);

/// MMSE matrix E[(s - E[s|y])(s - E[s|y])^T] for y = G s + z.
MmseStats mmse_stats(const Eigen::MatrixXd& g, const Constellation& c,
                     const IntegrationConfig& cfg);

// Diagonal MMSE entries for the rotated alphabet {V^T s_i} through the
// diagonal channel diag(lam_i sigma_i) on the leading k modes; returns
// length k = lam_sq.size().
Eigen::VectorXd mmse_diag_for_model(const Eigen::VectorXd& lam_sq, const Eigen::VectorXd& sigma_sq,
                                    const Eigen::MatrixXd& v, const Constellation& c,
                                    const IntegrationConfig& cfg);

// Second moments E[Phi_ij^2] of the conditional covariance of the rotated
// input, k x k over the powered modes.
PhiMoments phi_moments(const Eigen::VectorXd& lam_sq, const Eigen::VectorXd& sigma_sq,
                       const Eigen::MatrixXd& v, const Constellation& c,
                       const IntegrationConfig& cfg);

/// J(i, j) = d mmse_i / d sigma_j^2 = -lam_sq_j E[Phi_ij^2].
Eigen::MatrixXd mmse_jacobian(const Eigen::VectorXd& lam_sq, const Eigen::VectorXd& sigma_sq,
                              const Eigen::MatrixXd& v, const Constellation& c,
                              const IntegrationConfig& cfg);

// Linear-estimator closed forms, used as the Gaussian-signaling surrogate.
Eigen::VectorXd gaussian_mmse_diag(const Eigen::VectorXd& lam_sq, const Eigen::VectorXd& sigma_sq);
Eigen::MatrixXd gaussian_mmse_jacobian(const Eigen::VectorXd& lam_sq,
                                       const Eigen::VectorXd& sigma_sq);
/// (I + B^T B)^{-1} for the model y = B s + z with unit-covariance input.
Eigen::MatrixXd gaussian_mmse_matrix(const Eigen::MatrixXd& b);

// Per-mode mmse vector and its Jacobian in the squared singular values, at a
// fixed right factor. The KKT power-allocation solver works against this
// interface.
class MmseModel {
 public:
  virtual ~MmseModel() = default;
  virtual int modes() const = 0;
  virtual Eigen::VectorXd mmse_diag(const Eigen::VectorXd& sigma_sq) const = 0;
  virtual Eigen::MatrixXd mmse_jacobian(const Eigen::VectorXd& sigma_sq) const = 0;
};

// Discrete-alphabet model. The noise grid is frozen at construction so every
// evaluation inside one solve shares the same nodes.
class DiscreteMmseModel final : public MmseModel {
 public:
  DiscreteMmseModel(const Eigen::VectorXd& lam_sq, const Eigen::MatrixXd& v,
                    const Constellation& c, const IntegrationConfig& cfg);

  int modes() const override { return static_cast<int>(lam_sq_.size()); }
  Eigen::VectorXd mmse_diag(const Eigen::VectorXd& sigma_sq) const override;
  Eigen::MatrixXd mmse_jacobian(const Eigen::VectorXd& sigma_sq) const override;

 private:
  Eigen::VectorXd lam_sq_;
  Eigen::MatrixXd rotated_points_;  // V^T s_i
  Eigen::VectorXd priors_;
  NoiseGrid grid_;
};

class GaussianMmseModel final : public MmseModel {
 public:
  explicit GaussianMmseModel(const Eigen::VectorXd& lam_sq) : lam_sq_(lam_sq) {}

  int modes() const override { return static_cast<int>(lam_sq_.size()); }
  Eigen::VectorXd mmse_diag(const Eigen::VectorXd& sigma_sq) const override {
    return gaussian_mmse_diag(lam_sq_, sigma_sq);
  }
  Eigen::MatrixXd mmse_jacobian(const Eigen::VectorXd& sigma_sq) const override {
    return gaussian_mmse_jacobian(lam_sq_, sigma_sq);
  }

 private:
  Eigen::VectorXd lam_sq_;
};

namespace detail {

// One pass over (alphabet x noise nodes): error covariance of the conditional
// mean and, optionally, squared entries of the conditional covariance.
struct ConditionalMoments {
  Eigen::MatrixXd err_cov;
  Eigen::MatrixXd err_cov_stderr;
  Eigen::MatrixXd phi_sq;
  Eigen::MatrixXd phi_sq_stderr;
};

ConditionalMoments conditional_moments(const Eigen::MatrixXd& g, const Eigen::MatrixXd& alphabet,
                                       const Eigen::VectorXd& priors, const NoiseGrid& grid,
                                       bool want_phi);

}  // namespace detail

}  // namespace precopt
