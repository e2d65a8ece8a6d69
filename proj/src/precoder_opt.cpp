#include "precopt/precoder_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "precopt/rng.hpp"

namespace precopt {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t x = a + 0x9e3779b97f4a7c15ull * (b + 1) + 0xbf58476d1ce4e5b9ull * (c + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

Eigen::MatrixXd diag_gain_map(const Eigen::VectorXd& lam_sq, const Eigen::VectorXd& sigma_sq,
                              int m) {
  const int k = static_cast<int>(lam_sq.size());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(k, m);
  for (int i = 0; i < k; ++i)
    g(i, i) = std::sqrt(std::max(0.0, lam_sq(i) * std::max(0.0, sigma_sq(i))));
  return g;
}

// Pairs (u_i, sigma_i, v_i) are permuted into nonincreasing sigma order so
// the stored factors are a valid SVD presentation; the product is unchanged.
Precoder assemble_aligned(const Channel& ch, const Eigen::VectorXd& sigma,
                          const Eigen::MatrixXd& v) {
  const int k = static_cast<int>(sigma.size());
  const int m = static_cast<int>(v.rows());
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sigma(a) > sigma(b); });

  Eigen::MatrixXd u_cols(ch.tx_dims(), k);
  Eigen::MatrixXd v_perm(m, m);
  Eigen::VectorXd s_sorted(k);
  for (int j = 0; j < k; ++j) {
    u_cols.col(j) = ch.eig_vectors.col(order[j]);
    v_perm.col(j) = v.col(order[j]);
    s_sorted(j) = std::max(0.0, sigma(order[j]));
  }
  for (int j = k; j < m; ++j) v_perm.col(j) = v.col(j);
  return Precoder::from_factors(u_cols, s_sorted, v_perm);
}

struct KktState {
  Eigen::VectorXd x;         // sigma^2, zero on inactive modes
  double eta = 0.0;
  std::vector<bool> active;
};

double kkt_residual_norm(const Eigen::VectorXd& lam_sq, const Eigen::VectorXd& mmse,
                         const KktState& s, double rho) {
  double worst = 0.0;
  double power = 0.0;
  for (int i = 0; i < s.x.size(); ++i) {
    if (!s.active[i]) continue;
    worst = std::max(worst, std::abs(lam_sq(i) * mmse(i) / (2.0 * s.eta) - 1.0));
    power += s.x(i);
  }
  return std::max(worst, std::abs(power - rho) / std::max(1.0, rho));
}

}  // namespace

Eigen::MatrixXd align_left_singvecs(const Channel& ch, int k) {
  if (k < 0 || k > ch.tx_dims())
    throw std::invalid_argument("align_left_singvecs: k out of range");
  return ch.eig_vectors.leftCols(k);
}

Precoder align_improvement(const Channel& ch, const Precoder& p_any) {
  const int p = p_any.out_dims();
  const int m = p_any.in_dims();
  if (ch.tx_dims() != p) throw std::invalid_argument("align_improvement: dim mismatch");
  const int k = std::min(p, m);

  // Gram expressed in the right-factor basis: A = V^T (P^T R P) V
  const Eigen::MatrixXd w = p_any.p.transpose() * ch.gram * p_any.p;
  const Eigen::MatrixXd vfull = p_any.svd.v;
  if (vfull.cols() != m) throw std::invalid_argument("align_improvement: full right factor required");
  const Eigen::MatrixXd a = vfull.transpose() * w * vfull;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  const Eigen::VectorXd vals = es.eigenvalues();
  std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) { return vals(i) > vals(j); });

  const double tol = 1e-12 * std::max(1.0, vals.cwiseAbs().maxCoeff());
  Eigen::VectorXd sigma_m = Eigen::VectorXd::Zero(k);
  for (int r = 0; r < m; ++r) {
    const double delta = std::max(0.0, vals(idx[r]));
    if (delta <= tol) continue;
    if (r >= k || ch.eig_values_sq(r) <= tol)
      throw std::logic_error("align_improvement: Gram rank exceeds usable channel modes");
    sigma_m(r) = std::sqrt(delta / ch.eig_values_sq(r));
  }
  Eigen::MatrixXd v_tilde(m, m);
  for (int r = 0; r < m; ++r) v_tilde.col(r) = vfull * es.eigenvectors().col(idx[r]);
  return assemble_aligned(ch, sigma_m, v_tilde);
}

PowerAlloc solve_kkt_power(const Eigen::VectorXd& lam_sq, const MmseModel& model, double rho,
                           const PowerAllocOptions& opts) {
  const int k = static_cast<int>(lam_sq.size());
  if (rho <= 0) throw std::invalid_argument("solve_kkt_power: rho must be positive");
  if (model.modes() != k) throw std::invalid_argument("solve_kkt_power: mode count mismatch");
  const double lam_max = lam_sq.maxCoeff();
  if (lam_max <= 0) throw std::invalid_argument("solve_kkt_power: no usable channel modes");

  KktState s;
  s.x = Eigen::VectorXd::Zero(k);
  s.active.assign(k, false);
  int na = 0;
  for (int i = 0; i < k; ++i)
    if (lam_sq(i) > 1e-14 * lam_max) {
      s.active[i] = true;
      ++na;
    }
  for (int i = 0; i < k; ++i)
    if (s.active[i]) s.x(i) = rho / na;

  Eigen::VectorXd mmse = model.mmse_diag(s.x);
  {
    double acc = 0.0;
    for (int i = 0; i < k; ++i)
      if (s.active[i]) acc += lam_sq(i) * mmse(i);
    s.eta = std::max(acc / (2.0 * na), 1e-300);
  }

  KktReport report;
  report.converged = false;
  int iters = 0;
  int reactivations = 0;
  double resnorm = kkt_residual_norm(lam_sq, mmse, s, rho);

  KktState best = s;
  Eigen::VectorXd best_mmse = mmse;
  double best_res = resnorm;

  while (iters < opts.max_iter) {
    ++iters;
    if (resnorm <= opts.tol_kkt) {
      // candidate solution: re-admit a violated inactive mode, if any
      int worst = -1;
      double worst_excess = opts.tol_kkt;
      for (int i = 0; i < k; ++i) {
        if (s.active[i]) continue;
        const double excess = lam_sq(i) * mmse(i) / (2.0 * s.eta) - 1.0;
        if (excess > worst_excess) {
          worst_excess = excess;
          worst = i;
        }
      }
      if (worst >= 0 && reactivations < 2 * k) {
        s.active[worst] = true;
        ++reactivations;
        resnorm = kkt_residual_norm(lam_sq, mmse, s, rho);
        continue;
      }
      report.converged = true;
      break;
    }

    // Newton system on the active set, unknowns (x_active, eta)
    std::vector<int> act;
    for (int i = 0; i < k; ++i)
      if (s.active[i]) act.push_back(i);
    const int n = static_cast<int>(act.size());
    if (n == 0) break;

    const Eigen::MatrixXd jac = model.mmse_jacobian(s.x);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
    Eigen::VectorXd f(n + 1);
    for (int r = 0; r < n; ++r) {
      for (int cidx = 0; cidx < n; ++cidx) a(r, cidx) = lam_sq(act[r]) * jac(act[r], act[cidx]);
      a(r, n) = -2.0;
      f(r) = lam_sq(act[r]) * mmse(act[r]) - 2.0 * s.eta;
    }
    double power = 0.0;
    for (int i : act) power += s.x(i);
    a.row(n).head(n).setOnes();
    f(n) = power - rho;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) break;
    const Eigen::VectorXd step = lu.solve(-f);

    bool accepted = false;
    double t = 1.0;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt, t *= 0.5) {
      KktState trial = s;
      trial.eta = s.eta + t * step(n);
      if (trial.eta <= 0) continue;
      for (int r = 0; r < n; ++r) {
        double xv = s.x(act[r]) + t * step(r);
        if (xv < 0) {
          xv = 0.0;
          trial.active[act[r]] = false;
        }
        trial.x(act[r]) = xv;
      }
      bool any_active = false;
      for (int i = 0; i < k; ++i) any_active = any_active || trial.active[i];
      if (!any_active) continue;

      const Eigen::VectorXd trial_mmse = model.mmse_diag(trial.x);
      const double trial_res = kkt_residual_norm(lam_sq, trial_mmse, trial, rho);
      if (trial_res < resnorm) {
        s = trial;
        mmse = trial_mmse;
        resnorm = trial_res;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    if (resnorm < best_res) {
      best = s;
      best_mmse = mmse;
      best_res = resnorm;
    }
  }

  if (!report.converged && best_res < resnorm) {
    s = best;
    mmse = best_mmse;
    resnorm = best_res;
  }

  // a couple of undamped Newton steps sharpen the solution well below tol
  for (int ps = 0; report.converged && ps < opts.polish_steps; ++ps) {
    std::vector<int> act;
    for (int i = 0; i < k; ++i)
      if (s.active[i]) act.push_back(i);
    const int n = static_cast<int>(act.size());
    const Eigen::MatrixXd jac = model.mmse_jacobian(s.x);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
    Eigen::VectorXd f(n + 1);
    for (int r = 0; r < n; ++r) {
      for (int cidx = 0; cidx < n; ++cidx) a(r, cidx) = lam_sq(act[r]) * jac(act[r], act[cidx]);
      a(r, n) = -2.0;
      f(r) = lam_sq(act[r]) * mmse(act[r]) - 2.0 * s.eta;
    }
    double power = 0.0;
    for (int i : act) power += s.x(i);
    a.row(n).head(n).setOnes();
    f(n) = power - rho;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) break;
    const Eigen::VectorXd step = lu.solve(-f);
    KktState trial = s;
    bool ok = true;
    trial.eta = s.eta + step(n);
    if (trial.eta <= 0) ok = false;
    for (int r = 0; ok && r < n; ++r) {
      const double xv = s.x(act[r]) + step(r);
      if (xv < 0) ok = false;
      trial.x(act[r]) = xv;
    }
    if (!ok) break;
    const Eigen::VectorXd trial_mmse = model.mmse_diag(trial.x);
    const double trial_res = kkt_residual_norm(lam_sq, trial_mmse, trial, rho);
    if (trial_res >= resnorm) break;
    s = trial;
    mmse = trial_mmse;
    resnorm = trial_res;
  }

  report.eta = s.eta;
  report.iterations = iters;
  report.residuals.resize(k);
  for (int i = 0; i < k; ++i) {
    report.residuals(i) = lam_sq(i) * mmse(i) - 2.0 * s.eta;
    if (s.active[i]) report.active.push_back(i);
  }
  return PowerAlloc{s.x, report};
}

PowerAlloc opt_power_alloc(const Channel& ch, const Constellation& c, const Eigen::MatrixXd& v,
                           double rho, const IntegrationConfig& cfg,
                           const PowerAllocOptions& opts) {
  const int k = std::min(ch.tx_dims(), c.dims());
  const Eigen::VectorXd lam = ch.eig_values_sq.head(k);
  DiscreteMmseModel model(lam, v, c, cfg);
  return solve_kkt_power(lam, model, rho, opts);
}

Eigen::VectorXd waterfilling(const Eigen::VectorXd& lam_sq, double rho) {
  if (rho <= 0) throw std::invalid_argument("waterfilling: rho must be positive");
  const int k = static_cast<int>(lam_sq.size());
  for (int i = 0; i + 1 < k; ++i)
    if (lam_sq(i) < lam_sq(i + 1) - 1e-12)
      throw std::invalid_argument("waterfilling: gains must be nonincreasing");
  int usable = 0;
  while (usable < k && lam_sq(usable) > 0) ++usable;
  if (usable == 0) throw std::invalid_argument("waterfilling: no channel (all gains zero)");

  Eigen::VectorXd out = Eigen::VectorXd::Zero(k);
  double inv_sum = 0.0;
  for (int t = 1; t <= usable; ++t) {
    inv_sum += 1.0 / lam_sq(t - 1);
    const double mu = (rho + inv_sum) / t;
    const bool lower_ok = mu >= 1.0 / lam_sq(t - 1);
    const bool upper_ok = (t == usable) || (mu <= 1.0 / lam_sq(t));
    if (lower_ok && upper_ok) {
      for (int i = 0; i < t; ++i) out(i) = mu - 1.0 / lam_sq(i);
      return out;
    }
  }
  // numerical ties: fall back to all usable modes on
  const double mu = (rho + inv_sum) / usable;
  for (int i = 0; i < usable; ++i) out(i) = std::max(0.0, mu - 1.0 / lam_sq(i));
  return out;
}

Precoder low_snr_precoder(const Channel& ch, double rho) {
  if (rho <= 0) throw std::invalid_argument("low_snr_precoder: rho must be positive");
  const int p = ch.tx_dims();
  const double top = ch.eig_values_sq(0);
  int r = 1;
  if (top <= 0) {
    r = p;  // zero channel: uniform by convention
  } else {
    while (r < p && ch.eig_values_sq(r) >= top * (1.0 - 1e-12)) ++r;
  }
  Eigen::VectorXd sigma = Eigen::VectorXd::Zero(p);
  sigma.head(r).setConstant(std::sqrt(rho / r));
  return Precoder::from_factors(ch.eig_vectors, sigma, Eigen::MatrixXd::Identity(p, p));
}

Eigen::MatrixXd vp_euclidean_gradient(const Eigen::VectorXd& lam_sq,
                                      const Eigen::VectorXd& sigma_sq, const Eigen::MatrixXd& v,
                                      const Eigen::MatrixXd& e_s) {
  const int m = static_cast<int>(v.rows());
  const Eigen::MatrixXd g = diag_gain_map(lam_sq, sigma_sq, m);
  const Eigen::MatrixXd b = g * v.transpose();
  return e_s * b.transpose() * g;
}

Eigen::MatrixXd project_to_orthogonal_tangent(const Eigen::MatrixXd& v,
                                              const Eigen::MatrixXd& g) {
  const Eigen::MatrixXd a = v.transpose() * g;
  return v * (0.5 * (a - a.transpose()));
}

Eigen::MatrixXd qr_retract(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
  const Eigen::MatrixXd r = q.transpose() * m;
  for (int j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

PrecoderSolution optimize_right_singvecs(const Channel& ch, const Constellation& c, double rho,
                                         const IntegrationConfig& cfg,
                                         const VSearchOptions& opts) {
  const int p = ch.tx_dims();
  const int m = c.dims();
  const int k = std::min(p, m);
  const Eigen::VectorXd lam = ch.eig_values_sq.head(k);
  if (lam.maxCoeff() <= 0)
    throw std::invalid_argument("optimize_right_singvecs: zero channel");

  const auto mi_of = [&](const Eigen::MatrixXd& v, const Eigen::VectorXd& sig_sq) {
    return mi_discrete(diag_gain_map(lam, sig_sq, m) * v.transpose(), c, cfg);
  };

  // restart seeds over O(m): identity, a reflection, fixed rotations for
  // m == 2, then Haar-random draws
  std::vector<Eigen::MatrixXd> inits;
  inits.push_back(Eigen::MatrixXd::Identity(m, m));
  if (m > 1) {
    Eigen::MatrixXd refl = Eigen::MatrixXd::Identity(m, m);
    refl(m - 1, m - 1) = -1.0;
    inits.push_back(refl);
    if (m == 2) {
      for (double th : {std::numbers::pi / 8, std::numbers::pi / 4, 3 * std::numbers::pi / 8}) {
        Eigen::MatrixXd rot(2, 2);
        rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
        inits.push_back(rot);
      }
    }
    NormalSampler sampler(mix_seed(opts.seed, 0x5eed, 0));
    while (static_cast<int>(inits.size()) < opts.restarts)
      inits.push_back(qr_retract(sampler.matrix(m, m)));
  }
  if (static_cast<int>(inits.size()) > opts.restarts && opts.restarts > 0)
    inits.resize(std::max<std::size_t>(1, opts.restarts));

  PrecoderSolution best;
  bool have_best = false;
  for (std::size_t r = 0; r < inits.size(); ++r) {
    Eigen::MatrixXd v = inits[r];
    Eigen::VectorXd sig_sq;
    KktReport kkt;
    std::vector<double> trace;
    MiEstimate cur{-std::numeric_limits<double>::infinity(), 0.0, MiMethod::discrete_mc};

    for (int outer = 0; outer < opts.max_outer; ++outer) {
      DiscreteMmseModel model(lam, v, c, cfg.with_seed(mix_seed(cfg.seed, r, outer)));
      PowerAlloc alloc = solve_kkt_power(lam, model, rho, opts.power);
      sig_sq = alloc.sigma_sq;
      kkt = alloc.report;
      cur = mi_of(v, sig_sq);
      trace.push_back(cur.nats);
      if (m == 1) break;

      const Eigen::MatrixXd b = diag_gain_map(lam, sig_sq, m) * v.transpose();
      const Eigen::MatrixXd e_s = mmse_stats(b, c, cfg).mmse_matrix;
      const Eigen::MatrixXd grad = vp_euclidean_gradient(lam, sig_sq, v, e_s);
      const Eigen::MatrixXd tangent = project_to_orthogonal_tangent(v, grad);
      if (tangent.norm() < 1e-12) break;

      bool accepted = false;
      double t = opts.step_init;
      for (int ls = 0; ls < opts.max_line_search; ++ls, t *= 0.5) {
        const Eigen::MatrixXd v_trial = qr_retract(v + t * tangent);
        const MiEstimate mi_trial = mi_of(v_trial, sig_sq);
        if (mi_trial.nats > cur.nats + opts.improve_tol) {
          v = v_trial;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }

    if (!have_best || cur.nats > best.mi.nats) {
      best.precoder = assemble_aligned(ch, sig_sq.cwiseMax(0.0).cwiseSqrt(), v);
      best.mi = cur;
      best.kkt = kkt;
      best.vp_trace = trace;
      have_best = true;
    }
  }
  return best;
}

PrecoderSolution max_performance(const Channel& ch, const Constellation& c, double rho,
                                 const IntegrationConfig& cfg, const VSearchOptions& opts) {
  if (rho <= 0) throw std::invalid_argument("max_performance: rho must be positive");
  const int k = std::min(ch.tx_dims(), c.dims());
  if (ch.eig_values_sq.maxCoeff() <= 0) {
    // zero channel: uniform split by convention, mutual information zero
    PrecoderSolution sol;
    const Eigen::VectorXd sigma = Eigen::VectorXd::Constant(k, std::sqrt(rho / k));
    sol.precoder = assemble_aligned(ch, sigma, Eigen::MatrixXd::Identity(c.dims(), c.dims()));
    sol.mi = MiEstimate{0.0, 0.0, MiMethod::discrete_quadrature};
    sol.kkt.eta = 0.0;
    sol.kkt.converged = true;
    sol.kkt.residuals = Eigen::VectorXd::Zero(k);
    return sol;
  }
  return optimize_right_singvecs(ch, c, rho, cfg, opts);
}

PrecoderSolution max_performance_gaussian(const Channel& ch, double rho, int m) {
  if (rho <= 0) throw std::invalid_argument("max_performance_gaussian: rho must be positive");
  const int p = ch.tx_dims();
  if (m <= 0) m = p;
  const int k = std::min(p, m);
  const Eigen::VectorXd lam = ch.eig_values_sq.head(k);

  PrecoderSolution sol;
  const Eigen::VectorXd sig_sq = waterfilling(lam, rho);
  sol.precoder = assemble_aligned(ch, sig_sq.cwiseSqrt(), Eigen::MatrixXd::Identity(m, m));
  sol.mi = mi_gaussian(sol.precoder.p * sol.precoder.p.transpose(), ch.gram);
  sol.kkt.converged = true;
  // water level mu gives eta = 1/(2 mu)
  double mu = 0.0;
  for (int i = 0; i < k; ++i)
    if (sig_sq(i) > 0) mu = std::max(mu, sig_sq(i) + 1.0 / lam(i));
  sol.kkt.eta = mu > 0 ? 1.0 / (2.0 * mu) : 0.0;
  sol.kkt.residuals.resize(k);
  for (int i = 0; i < k; ++i) {
    const double mmse_i = 1.0 / (1.0 + lam(i) * sig_sq(i));
    sol.kkt.residuals(i) = lam(i) * mmse_i - 2.0 * sol.kkt.eta;
    if (sig_sq(i) > 0) sol.kkt.active.push_back(i);
  }
  sol.vp_trace.push_back(sol.mi.nats);
  return sol;
}

}  // namespace precopt
