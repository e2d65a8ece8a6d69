#include "precopt/infomeasures.hpp"

#include <cmath>
#include <numbers>

namespace precopt {

namespace {

constexpr int kNodeChunk = 2048;

void require_psd(const Eigen::MatrixXd& q, const char* what) {
  if (q.rows() != q.cols()) throw std::invalid_argument(std::string(what) + ": not square");
  if ((q - q.transpose()).norm() > 1e-8 * (1.0 + q.norm()))
    throw std::invalid_argument(std::string(what) + ": not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff()))
    throw std::invalid_argument(std::string(what) + ": not positive semidefinite");
}

}  // namespace

double MiEstimate::bits() const { return nats / std::numbers::ln2; }

MiEstimate mi_gaussian(const Eigen::MatrixXd& q, const Eigen::MatrixXd& gram) {
  require_psd(q, "mi_gaussian: q");
  if (gram.rows() != q.rows()) throw std::invalid_argument("mi_gaussian: dimension mismatch");
  // symmetric form: (1/2) log det(I + R^{1/2} Q R^{1/2})
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const Eigen::MatrixXd sqrt_r = es.eigenvectors() *
                                 es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                                 es.eigenvectors().transpose();
  const Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(q.rows(), q.rows()) +
                                sqrt_r * q * sqrt_r;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ei(inner);
  double logdet = 0.0;
  for (int i = 0; i < ei.eigenvalues().size(); ++i)
    logdet += std::log(std::max(ei.eigenvalues()(i), 1e-300));
  return MiEstimate{0.5 * logdet, 0.0, MiMethod::gaussian_closed_form};
}

MiEstimate mi_discrete(const Eigen::MatrixXd& g, const Constellation& c,
                       const IntegrationConfig& cfg) {
  if (g.cols() != c.dims()) throw std::invalid_argument("mi_discrete: dimension mismatch");
  const int L = c.size();
  const int d = static_cast<int>(g.rows());
  const NoiseGrid grid = make_noise_grid(d, cfg);
  const int T = static_cast<int>(grid.points.cols());
  const int B = grid.batches;

  const Eigen::MatrixXd gs = g * c.points;
  const Eigen::VectorXd log_priors = c.priors.array().log();

  std::vector<double> acc(B, 0.0), mass(B, 0.0);
  Eigen::VectorXd cvec(L);
  for (int a = 0; a < L; ++a) {
    const Eigen::MatrixXd dm = gs.col(a).replicate(1, L) - gs;
    for (int j = 0; j < L; ++j) cvec(j) = log_priors(j) - 0.5 * dm.col(j).squaredNorm();
    for (int t0 = 0; t0 < T; t0 += kNodeChunk) {
      const int nc = std::min(kNodeChunk, T - t0);
      Eigen::MatrixXd logits = (-dm.transpose()) * grid.points.middleCols(t0, nc);
      logits.colwise() += cvec;
      for (int tc = 0; tc < nc; ++tc) {
        const int t = t0 + tc;
        const int b = std::min(B - 1, static_cast<int>(static_cast<long>(t) * B / T));
        const double mx = logits.col(tc).maxCoeff();
        const double lse = mx + std::log((logits.col(tc).array() - mx).exp().sum());
        acc[b] += c.priors(a) * grid.weights(t) * (-lse);
        if (a == 0) mass[b] += grid.weights(t);
      }
    }
  }

  double total = 0.0;
  for (int b = 0; b < B; ++b) total += acc[b];
  double se = 0.0;
  if (!grid.deterministic && B > 1) {
    double var = 0.0;
    for (int b = 0; b < B; ++b) {
      const double dev = acc[b] / mass[b] - total;
      var += dev * dev;
    }
    se = std::sqrt(var / (B - 1.0) / B);
  }
  if (!grid.deterministic && cfg.stderr_target && se > *cfg.stderr_target)
    throw IntegrationBudgetError("mi_discrete: stderr " + std::to_string(se) + " > target " +
                                 std::to_string(*cfg.stderr_target));
  const MiMethod method = grid.deterministic ? MiMethod::discrete_quadrature
                                             : MiMethod::discrete_mc;
  return MiEstimate{total, se, method};
}

MiEstimate mi_discrete_colored(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w,
                               const Constellation& c, const IntegrationConfig& cfg) {
  require_psd(w, "mi_discrete_colored: noise covariance");
  if (w.rows() != a.rows()) throw std::invalid_argument("mi_discrete_colored: dim mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w);
  const double emax = es.eigenvalues().maxCoeff();
  const double tol = 1e-12 * std::max(1.0, emax);
  std::vector<int> keep;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > tol) keep.push_back(i);
  const int r = static_cast<int>(keep.size());

  Eigen::MatrixXd u_r(a.rows(), r);
  Eigen::VectorXd d_r(r);
  for (int j = 0; j < r; ++j) {
    u_r.col(j) = es.eigenvectors().col(keep[j]);
    d_r(j) = es.eigenvalues()(keep[j]);
  }
  // signal outside the noise range would carry noiseless information
  const Eigen::MatrixXd residual = a - u_r * (u_r.transpose() * a);
  if (residual.norm() > 1e-8 * (1.0 + a.norm()))
    throw std::invalid_argument("mi_discrete_colored: signal component outside noise range");
  if (r == 0) return MiEstimate{0.0, 0.0, MiMethod::discrete_mc};

  const Eigen::MatrixXd whitened =
      d_r.cwiseSqrt().cwiseInverse().asDiagonal() * (u_r.transpose() * a);
  return mi_discrete(whitened, c, cfg);
}

MiEstimate mi_low_snr(const Eigen::MatrixXd& q, const Eigen::MatrixXd& gram) {
  if (q.rows() != gram.rows()) throw std::invalid_argument("mi_low_snr: dimension mismatch");
  return MiEstimate{0.5 * (q * gram).trace(), 0.0, MiMethod::low_snr_closed_form};
}

Eigen::VectorXd mi_gradient_sigma_sq(const Eigen::VectorXd& lam_sq,
                                     const Eigen::VectorXd& sigma_sq, const Eigen::MatrixXd& v,
                                     const Constellation& c, const IntegrationConfig& cfg) {
  const Eigen::VectorXd mm = mmse_diag_for_model(lam_sq, sigma_sq, v, c, cfg);
  return lam_sq.cwiseProduct(mm);
}

}  // namespace precopt
