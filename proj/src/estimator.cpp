#include "precopt/estimator.hpp"

#include <cmath>

#include "precopt/quadrature.hpp"
#include "precopt/rng.hpp"

namespace precopt {

namespace {

constexpr int kMcBatches = 20;
constexpr int kNodeChunk = 2048;
constexpr int kMaxAlphabet = 1024;

void validate_config(int dims, const IntegrationConfig& cfg) {
  if (cfg.method == IntegrationConfig::Method::monte_carlo) {
    if (cfg.samples < 1000)
      throw std::invalid_argument("IntegrationConfig: at least 1000 Monte Carlo samples");
  } else {
    if (cfg.nodes_per_dim < 3 || cfg.nodes_per_dim > 30)
      throw std::invalid_argument("IntegrationConfig: quadrature nodes must be in [3, 30]");
    if (dims > 4)
      throw std::invalid_argument(
          "IntegrationConfig: quadrature limited to noise dimension <= 4");
  }
}

Eigen::MatrixXd diag_map(const Eigen::VectorXd& lam_sq, const Eigen::VectorXd& sigma_sq, int m) {
  const int k = static_cast<int>(lam_sq.size());
  if (sigma_sq.size() != k) throw std::invalid_argument("sigma_sq length mismatch");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(k, m);
  for (int i = 0; i < k; ++i) {
    const double prod = lam_sq(i) * std::max(0.0, sigma_sq(i));
    g(i, i) = std::sqrt(std::max(0.0, prod));
  }
  return g;
}

void check_budget(const NoiseGrid& grid, const IntegrationConfig& cfg, double worst_stderr) {
  if (!grid.deterministic && cfg.stderr_target && worst_stderr > *cfg.stderr_target)
    throw IntegrationBudgetError("integration budget exhausted: stderr " +
                                 std::to_string(worst_stderr) + " > target " +
                                 std::to_string(*cfg.stderr_target));
}

}  // namespace

NoiseGrid make_noise_grid(int dims, const IntegrationConfig& cfg) {
  validate_config(dims, cfg);
  NoiseGrid grid;
  if (cfg.method == IntegrationConfig::Method::gauss_hermite) {
    QuadratureGrid q = tensor_gauss_hermite(dims, cfg.nodes_per_dim);
    grid.points = std::move(q.points);
    grid.weights = std::move(q.weights);
    grid.deterministic = true;
    grid.batches = 1;
  } else {
    NormalSampler sampler(cfg.seed);
    grid.points = sampler.matrix(dims, cfg.samples);
    grid.weights = Eigen::VectorXd::Constant(cfg.samples, 1.0 / cfg.samples);
    grid.deterministic = false;
    grid.batches = kMcBatches;
  }
  return grid;
}

Eigen::VectorXd posterior_mean(const Eigen::MatrixXd& g, const Constellation& c,
                               const Eigen::VectorXd& y) {
  if (g.cols() != c.dims() || g.rows() != y.size())
    throw std::invalid_argument("posterior_mean: dimension mismatch");
  const int L = c.size();
  Eigen::VectorXd logw(L);
  for (int i = 0; i < L; ++i)
    logw(i) = std::log(c.priors(i)) - 0.5 * (y - g * c.points.col(i)).squaredNorm();
  const double mx = logw.maxCoeff();
  const Eigen::VectorXd w = (logw.array() - mx).exp();
  return c.points * (w / w.sum());
}

namespace detail {

ConditionalMoments conditional_moments(const Eigen::MatrixXd& g, const Eigen::MatrixXd& alphabet,
                                       const Eigen::VectorXd& priors, const NoiseGrid& grid,
                                       bool want_phi) {
  const int m = static_cast<int>(alphabet.rows());
  const int L = static_cast<int>(alphabet.cols());
  if (L > kMaxAlphabet) throw std::invalid_argument("alphabet larger than 1024 points");
  const int T = static_cast<int>(grid.points.cols());
  const int B = grid.batches;

  const Eigen::MatrixXd gs = g * alphabet;  // d x L
  const Eigen::VectorXd log_priors = priors.array().log();

  std::vector<Eigen::MatrixXd> err_acc(B, Eigen::MatrixXd::Zero(m, m));
  std::vector<Eigen::MatrixXd> phi_acc(B, Eigen::MatrixXd::Zero(m, m));
  std::vector<double> mass(B, 0.0);

  Eigen::VectorXd cvec(L), wcol(L), mu(m), err(m);
  Eigen::MatrixXd phi(m, m);
  for (int a = 0; a < L; ++a) {
    const Eigen::MatrixXd d = gs.col(a).replicate(1, L) - gs;  // d x L
    for (int j = 0; j < L; ++j) cvec(j) = log_priors(j) - 0.5 * d.col(j).squaredNorm();
    for (int t0 = 0; t0 < T; t0 += kNodeChunk) {
      const int nc = std::min(kNodeChunk, T - t0);
      Eigen::MatrixXd logits = (-d.transpose()) * grid.points.middleCols(t0, nc);  // L x nc
      logits.colwise() += cvec;
      for (int tc = 0; tc < nc; ++tc) {
        const int t = t0 + tc;
        const int b = std::min(B - 1, static_cast<int>(static_cast<long>(t) * B / T));
        const double mx = logits.col(tc).maxCoeff();
        wcol = (logits.col(tc).array() - mx).exp();
        wcol /= wcol.sum();
        mu.noalias() = alphabet * wcol;
        err = alphabet.col(a) - mu;
        const double coeff = priors(a) * grid.weights(t);
        err_acc[b].noalias() += coeff * err * err.transpose();
        if (want_phi) {
          phi.noalias() = alphabet * wcol.asDiagonal() * alphabet.transpose();
          phi.noalias() -= mu * mu.transpose();
          phi_acc[b] += coeff * phi.array().square().matrix();
        }
        if (a == 0) mass[b] += grid.weights(t);
      }
    }
  }

  ConditionalMoments out;
  out.err_cov = Eigen::MatrixXd::Zero(m, m);
  out.phi_sq = Eigen::MatrixXd::Zero(m, m);
  for (int b = 0; b < B; ++b) {
    out.err_cov += err_acc[b];
    if (want_phi) out.phi_sq += phi_acc[b];
  }
  out.err_cov_stderr = Eigen::MatrixXd::Zero(m, m);
  out.phi_sq_stderr = Eigen::MatrixXd::Zero(m, m);
  if (!grid.deterministic && B > 1) {
    auto batch_stderr = [&](const std::vector<Eigen::MatrixXd>& acc,
                            const Eigen::MatrixXd& mean) {
      Eigen::MatrixXd var = Eigen::MatrixXd::Zero(m, m);
      for (int b = 0; b < B; ++b) {
        const Eigen::MatrixXd dev = acc[b] / mass[b] - mean;
        var += dev.array().square().matrix();
      }
      return (var / (B - 1.0) / B).cwiseSqrt().eval();
    };
    out.err_cov_stderr = batch_stderr(err_acc, out.err_cov);
    if (want_phi) out.phi_sq_stderr = batch_stderr(phi_acc, out.phi_sq);
  }
  return out;
}

}  // namespace detail

MmseStats mmse_stats(const Eigen::MatrixXd& g, const Constellation& c,
                     const IntegrationConfig& cfg) {
  if (g.cols() != c.dims()) throw std::invalid_argument("mmse_stats: dimension mismatch");
  const NoiseGrid grid = make_noise_grid(static_cast<int>(g.rows()), cfg);
  const auto mom = detail::conditional_moments(g, c.points, c.priors, grid, false);
  check_budget(grid, cfg, mom.err_cov_stderr.maxCoeff());
  return MmseStats{mom.err_cov, mom.err_cov.diagonal(), mom.err_cov_stderr};
}

Eigen::VectorXd mmse_diag_for_model(const Eigen::VectorXd& lam_sq, const Eigen::VectorXd& sigma_sq,
                                    const Eigen::MatrixXd& v, const Constellation& c,
                                    const IntegrationConfig& cfg) {
  DiscreteMmseModel model(lam_sq, v, c, cfg);
  return model.mmse_diag(sigma_sq);
}

PhiMoments phi_moments(const Eigen::VectorXd& lam_sq, const Eigen::VectorXd& sigma_sq,
                       const Eigen::MatrixXd& v, const Constellation& c,
                       const IntegrationConfig& cfg) {
  const int k = static_cast<int>(lam_sq.size());
  const Eigen::MatrixXd rotated = v.transpose() * c.points;
  const Eigen::MatrixXd g = diag_map(lam_sq, sigma_sq, c.dims());
  const NoiseGrid grid = make_noise_grid(k, cfg);
  const auto mom = detail::conditional_moments(g, rotated, c.priors, grid, true);
  check_budget(grid, cfg, mom.phi_sq_stderr.maxCoeff());
  return PhiMoments{mom.phi_sq.topLeftCorner(k, k), mom.phi_sq_stderr.topLeftCorner(k, k)};
}

Eigen::MatrixXd mmse_jacobian(const Eigen::VectorXd& lam_sq, const Eigen::VectorXd& sigma_sq,
                              const Eigen::MatrixXd& v, const Constellation& c,
                              const IntegrationConfig& cfg) {
  const PhiMoments phi = phi_moments(lam_sq, sigma_sq, v, c, cfg);
  return phi.phi_sq * (-lam_sq).asDiagonal();
}

Eigen::VectorXd gaussian_mmse_diag(const Eigen::VectorXd& lam_sq,
                                   const Eigen::VectorXd& sigma_sq) {
  return (1.0 + lam_sq.array() * sigma_sq.array()).inverse();
}

Eigen::MatrixXd gaussian_mmse_jacobian(const Eigen::VectorXd& lam_sq,
                                       const Eigen::VectorXd& sigma_sq) {
  const Eigen::ArrayXd mm = (1.0 + lam_sq.array() * sigma_sq.array()).inverse();
  return (-lam_sq.array() * mm.square()).matrix().asDiagonal();
}

Eigen::MatrixXd gaussian_mmse_matrix(const Eigen::MatrixXd& b) {
  const int m = static_cast<int>(b.cols());
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m) + b.transpose() * b;
  return a.ldlt().solve(Eigen::MatrixXd::Identity(m, m));
}

DiscreteMmseModel::DiscreteMmseModel(const Eigen::VectorXd& lam_sq, const Eigen::MatrixXd& v,
                                     const Constellation& c, const IntegrationConfig& cfg)
    : lam_sq_(lam_sq), priors_(c.priors) {
  const int m = c.dims();
  if (v.rows() != m || v.cols() != m)
    throw std::invalid_argument("DiscreteMmseModel: v must be m x m");
  if ((v.transpose() * v - Eigen::MatrixXd::Identity(m, m)).norm() > 1e-8)
    throw std::invalid_argument("DiscreteMmseModel: v not orthonormal");
  if (lam_sq.size() > m)
    throw std::invalid_argument("DiscreteMmseModel: more modes than input dimensions");
  rotated_points_ = v.transpose() * c.points;
  grid_ = make_noise_grid(static_cast<int>(lam_sq.size()), cfg);
}

Eigen::VectorXd DiscreteMmseModel::mmse_diag(const Eigen::VectorXd& sigma_sq) const {
  const int k = modes();
  const Eigen::MatrixXd g = diag_map(lam_sq_, sigma_sq, static_cast<int>(rotated_points_.rows()));
  const auto mom = detail::conditional_moments(g, rotated_points_, priors_, grid_, false);
  return mom.err_cov.diagonal().head(k);
}

Eigen::MatrixXd DiscreteMmseModel::mmse_jacobian(const Eigen::VectorXd& sigma_sq) const {
  const int k = modes();
  const Eigen::MatrixXd g = diag_map(lam_sq_, sigma_sq, static_cast<int>(rotated_points_.rows()));
  const auto mom = detail::conditional_moments(g, rotated_points_, priors_, grid_, true);
  return mom.phi_sq.topLeftCorner(k, k) * (-lam_sq_).asDiagonal();
}

}  // namespace precopt
