#include "precopt/mindist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "precopt/precoder_opt.hpp"
#include "precopt/rng.hpp"

namespace precopt {

namespace {

constexpr int kMaxSetSize = 64;
constexpr int kMaxEnumWeights = 12;

std::vector<int> lexicographic_order(const Eigen::MatrixXd& cols) {
  std::vector<int> idx(cols.cols());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    for (int i = 0; i < cols.rows(); ++i) {
      if (cols(i, a) != cols(i, b)) return cols(i, a) < cols(i, b);
    }
    return a < b;
  });
  return idx;
}

/// Orthonormal m x m matrix whose first column is the given unit vector.
Eigen::MatrixXd complete_orthonormal(const Eigen::VectorXd& first) {
  const int m = static_cast<int>(first.size());
  Eigen::MatrixXd seed = Eigen::MatrixXd::Identity(m, m);
  seed.col(0) = first;
  Eigen::MatrixXd q = qr_retract(seed);
  if (q.col(0).dot(first) < 0) q.col(0) = -q.col(0);
  return q;
}

/// Differences deduplicated up to sign (|w^T z| constraints coincide).
Eigen::MatrixXd dedupe_up_to_sign(const Eigen::MatrixXd& diffs) {
  std::vector<int> kept;
  for (int j = 0; j < diffs.cols(); ++j) {
    bool dup = false;
    for (int i : kept) {
      if ((diffs.col(i) - diffs.col(j)).lpNorm<Eigen::Infinity>() <= 1e-12 ||
          (diffs.col(i) + diffs.col(j)).lpNorm<Eigen::Infinity>() <= 1e-12) {
        dup = true;
        break;
      }
    }
    if (!dup) kept.push_back(j);
  }
  Eigen::MatrixXd out(diffs.rows(), kept.size());
  for (std::size_t j = 0; j < kept.size(); ++j) out.col(j) = diffs.col(kept[j]);
  return out;
}

struct UnitSolution {
  double value = 0.0;
  Eigen::VectorXd sigma;  // per-mode singular values at unit power
  Eigen::MatrixXd v;      // m x m right factor
  bool heuristic = false;
};

// power split and rotation angle, exact inner maximization over the split
// (the per-difference distances are linear in it)
UnitSolution solve_two_dim(const Eigen::VectorXd& lam_sq, const Eigen::MatrixXd& diffs,
                           const MinDistOptions& opts) {
  const int K = static_cast<int>(diffs.cols());

  const auto best_split_at = [&](double theta, double& out_t) {
    const double c = std::cos(theta), s = std::sin(theta);
    Eigen::VectorXd c1(K), c2(K);
    for (int e = 0; e < K; ++e) {
      const double d1 = c * diffs(0, e) + s * diffs(1, e);
      const double d2 = -s * diffs(0, e) + c * diffs(1, e);
      c1(e) = lam_sq(0) * d1 * d1;  // distance at t = 1
      c2(e) = lam_sq(1) * d2 * d2;  // distance at t = 0
    }
    std::vector<double> cand = {0.0, 1.0};
    for (int i = 0; i < K; ++i)
      for (int j = i + 1; j < K; ++j) {
        const double denom = (c1(i) - c2(i)) - (c1(j) - c2(j));
        if (std::abs(denom) < 1e-15) continue;
        const double t = (c2(j) - c2(i)) / denom;
        if (t > 0.0 && t < 1.0) cand.push_back(t);
      }
    double best = -1.0;
    for (double t : cand) {
      double mn = std::numeric_limits<double>::infinity();
      for (int e = 0; e < K; ++e) mn = std::min(mn, c2(e) + t * (c1(e) - c2(e)));
      if (mn > best) {
        best = mn;
        out_t = t;
      }
    }
    return best;
  };

  double best_val = -1.0, best_t = 0.5, best_theta = 0.0;
  double lo = 0.0, hi = std::numbers::pi;
  int points = std::max(8, opts.theta_grid);
  for (int round = 0; round <= opts.refine_rounds; ++round) {
    for (int i = 0; i < points; ++i) {
      const double theta = lo + (hi - lo) * i / points;
      double t = 0.5;
      const double val = best_split_at(theta, t);
      if (val > best_val) {
        best_val = val;
        best_t = t;
        best_theta = theta;
      }
    }
    const double window = (hi - lo) / points;
    lo = best_theta - window;
    hi = best_theta + window;
    points = 40;
  }

  UnitSolution sol;
  sol.value = best_val;
  sol.sigma.resize(2);
  sol.sigma << std::sqrt(best_t), std::sqrt(1.0 - best_t);
  sol.v.resize(2, 2);
  sol.v << std::cos(best_theta), -std::sin(best_theta), std::sin(best_theta),
      std::cos(best_theta);
  return sol;
}

Eigen::VectorXd project_to_simplex(Eigen::VectorXd x, double budget) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd u = x;
  std::sort(u.data(), u.data() + n, std::greater<double>());
  double css = 0.0, tau = 0.0;
  int rho_idx = 0;
  for (int i = 0; i < n; ++i) {
    css += u(i);
    const double t = (css - budget) / (i + 1);
    if (u(i) - t > 0) {
      rho_idx = i;
      tau = t;
    }
  }
  (void)rho_idx;
  return (x.array() - tau).max(0.0).matrix();
}

UnitSolution solve_softmin(const Eigen::VectorXd& lam_sq, const Eigen::MatrixXd& diffs,
                           int m, const MinDistOptions& opts) {
  const int k = static_cast<int>(lam_sq.size());
  const int K = static_cast<int>(diffs.cols());

  const auto true_min = [&](const Eigen::VectorXd& split, const Eigen::MatrixXd& v) {
    double mn = std::numeric_limits<double>::infinity();
    for (int e = 0; e < K; ++e) {
      double d = 0.0;
      for (int i = 0; i < k; ++i) {
        const double pr = v.col(i).dot(diffs.col(e));
        d += lam_sq(i) * split(i) * pr * pr;
      }
      mn = std::min(mn, d);
    }
    return mn;
  };
  const auto softmin = [&](const Eigen::VectorXd& split, const Eigen::MatrixXd& v, double temp,
                           Eigen::VectorXd* w_out) {
    Eigen::VectorXd d(K);
    for (int e = 0; e < K; ++e) {
      double de = 0.0;
      for (int i = 0; i < k; ++i) {
        const double pr = v.col(i).dot(diffs.col(e));
        de += lam_sq(i) * split(i) * pr * pr;
      }
      d(e) = de;
    }
    const double mn = d.minCoeff();
    const Eigen::VectorXd ex = ((mn - d.array()) / temp).exp();
    if (w_out) *w_out = ex / ex.sum();
    return mn - temp * std::log(ex.sum());
  };

  NormalSampler sampler(opts.seed);
  UnitSolution best;
  best.value = -1.0;
  for (int restart = 0; restart < opts.softmin_restarts; ++restart) {
    Eigen::VectorXd split = Eigen::VectorXd::Constant(k, 1.0 / k);
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(m, m);
    if (restart > 0) {
      Eigen::VectorXd raw(k);
      for (int i = 0; i < k; ++i) raw(i) = sampler.uniform();
      split = project_to_simplex(raw, 1.0);
      v = qr_retract(sampler.matrix(m, m));
    }

    for (int stage = 0; stage < opts.softmin_stages; ++stage) {
      const double frac = opts.softmin_stages > 1
                              ? static_cast<double>(stage) / (opts.softmin_stages - 1)
                              : 1.0;
      const double temp = opts.softmin_t_init *
                          std::pow(opts.softmin_t_final / opts.softmin_t_init, frac);
      for (int step = 0; step < opts.softmin_steps_per_stage; ++step) {
        Eigen::VectorXd w;
        const double f0 = softmin(split, v, temp, &w);
        // ascent directions from the softmin weights
        Eigen::VectorXd gs = Eigen::VectorXd::Zero(k);
        Eigen::MatrixXd gv = Eigen::MatrixXd::Zero(m, m);
        for (int e = 0; e < K; ++e) {
          for (int i = 0; i < k; ++i) {
            const double pr = v.col(i).dot(diffs.col(e));
            gs(i) += w(e) * lam_sq(i) * pr * pr;
            gv.col(i) += w(e) * 2.0 * lam_sq(i) * split(i) * pr * diffs.col(e);
          }
        }
        const Eigen::MatrixXd tangent = project_to_orthogonal_tangent(v, gv);
        double t = 0.25;
        bool accepted = false;
        for (int ls = 0; ls < 16; ++ls, t *= 0.5) {
          const Eigen::VectorXd split_trial = project_to_simplex(split + t * gs, 1.0);
          const Eigen::MatrixXd v_trial = qr_retract(v + t * tangent);
          if (softmin(split_trial, v_trial, temp, nullptr) > f0 + 1e-14) {
            split = split_trial;
            v = v_trial;
            accepted = true;
            break;
          }
        }
        if (!accepted) break;
      }
    }
    const double val = true_min(split, v);
    if (val > best.value) {
      best.value = val;
      best.sigma = split.cwiseMax(0.0).cwiseSqrt();
      best.v = v;
    }
  }
  best.heuristic = true;
  return best;
}

}  // namespace

DistanceResult d_min(const Channel& ch, const Precoder& prec, const DifferenceSet& ds) {
  if (ds.count() == 0) throw std::invalid_argument("d_min: empty difference set");
  if (ds.diffs.rows() != prec.in_dims()) throw std::invalid_argument("d_min: dimension mismatch");
  const Eigen::MatrixXd gram_p = prec.p.transpose() * ch.gram * prec.p;
  const std::vector<int> order = lexicographic_order(ds.diffs);
  DistanceResult out;
  out.value = std::numeric_limits<double>::infinity();
  for (int j : order) {
    const double d = ds.diffs.col(j).dot(gram_p * ds.diffs.col(j));
    if (d < out.value) {
      out.value = d;
      out.argmin_diff = ds.diffs.col(j);
    }
  }
  out.precoder = prec;
  out.power = prec.power;
  return out;
}

DistanceResult max_min_dist(double rho, const DifferenceSet& ds, const Channel& ch,
                            const MinDistOptions& opts) {
  if (rho <= 0) throw std::invalid_argument("max_min_dist: rho must be positive");
  if (ds.count() == 0) throw std::invalid_argument("max_min_dist: empty difference set");
  if (ds.count() > kMaxSetSize)
    throw DimensionCapError("max_min_dist: difference set larger than 64");
  const int m = static_cast<int>(ds.diffs.rows());
  const int p = ch.tx_dims();
  const int k = std::min(p, m);
  const Eigen::VectorXd lam = ch.eig_values_sq.head(k);
  int usable = 0;
  while (usable < k && lam(usable) > 1e-14 * std::max(1.0, lam(0))) ++usable;

  bool has_zero_diff = false;
  for (int j = 0; j < ds.count(); ++j)
    if (ds.diffs.col(j).lpNorm<Eigen::Infinity>() <= 1e-12) has_zero_diff = true;

  UnitSolution unit;
  if (usable == 0 || has_zero_diff) {
    // nothing separates: any feasible precoder, uniform by convention
    unit.value = 0.0;
    unit.sigma = Eigen::VectorXd::Constant(k, std::sqrt(1.0 / k));
    unit.v = Eigen::MatrixXd::Identity(m, m);
  } else if (m == 1) {
    unit.value = lam(0) * ds.diffs.row(0).array().square().minCoeff();
    unit.sigma = Eigen::VectorXd::Ones(1);
    unit.v = Eigen::MatrixXd::Identity(1, 1);
  } else if (usable == 1 && dedupe_up_to_sign(ds.diffs).cols() <= kMaxEnumWeights &&
             m <= kMaxEnumWeights) {
    // rank-one channel: all distance sits on the top mode and the program is
    // the normalized least-norm problem over the differences
    const auto [t_star, z_star] = min_norm(MinNormInstance{dedupe_up_to_sign(ds.diffs)});
    unit.value = lam(0) / t_star;
    unit.sigma = Eigen::VectorXd::Zero(k);
    unit.sigma(0) = 1.0;
    unit.v = complete_orthonormal(z_star / z_star.norm());
  } else if (m == 2) {
    unit = solve_two_dim(lam, ds.diffs, opts);
  } else if (m == 3) {
    unit = solve_softmin(lam, ds.diffs, m, opts);
  } else {
    throw DimensionCapError("max_min_dist: exact paths cover m <= 3 (or rank-one channels)");
  }

  Eigen::VectorXd sigma_scaled(k);
  for (int i = 0; i < k; ++i)
    sigma_scaled(i) = std::sqrt(rho) * (i < unit.sigma.size() ? unit.sigma(i) : 0.0);

  // assemble through the channel eigenbasis, pairing mode i with v column i
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return sigma_scaled(a) > sigma_scaled(b); });
  Eigen::MatrixXd u_cols(p, k);
  Eigen::MatrixXd v_perm(m, m);
  Eigen::VectorXd s_sorted(k);
  for (int j = 0; j < k; ++j) {
    u_cols.col(j) = ch.eig_vectors.col(order[j]);
    v_perm.col(j) = unit.v.col(order[j]);
    s_sorted(j) = sigma_scaled(order[j]);
  }
  for (int j = k; j < m; ++j) v_perm.col(j) = unit.v.col(j);
  const Precoder prec = Precoder::from_factors(u_cols, s_sorted, v_perm);

  DistanceResult out = d_min(ch, prec, ds);
  out.power = rho;
  out.heuristic = unit.heuristic;
  return out;
}

DistanceResult reduce_minpower_to_maxmindist(double d, const DifferenceSet& ds, const Channel& ch,
                                             const MinDistOptions& opts) {
  if (d <= 0) throw std::invalid_argument("min_power: d must be positive");
  // Step 1: unit-power max-min-distance subproblem
  const DistanceResult base = max_min_dist(1.0, ds, ch, opts);
  if (base.value <= 0)
    throw InfeasibleError("min_power: no unit-power precoder separates the set through H");
  // Step 2: scale the power
  const double rho_star = d / base.value;
  // Step 3: scale the precoder
  const Precoder p_star = Precoder::from_factors(
      base.precoder->svd.u, std::sqrt(rho_star) * base.precoder->svd.singvals,
      base.precoder->svd.v);
  DistanceResult out = d_min(ch, p_star, ds);
  out.power = rho_star;
  out.heuristic = base.heuristic;
  return out;
}

DistanceResult min_power(double d, const DifferenceSet& ds, const Channel& ch,
                         const MinDistOptions& opts) {
  return reduce_minpower_to_maxmindist(d, ds, ch, opts);
}

std::pair<double, Eigen::VectorXd> min_norm(const MinNormInstance& inst) {
  const int m = static_cast<int>(inst.weights.rows());
  const int K = static_cast<int>(inst.weights.cols());
  if (K < 1) throw std::invalid_argument("min_norm: empty instance");
  if (K > kMaxEnumWeights || m > kMaxEnumWeights)
    throw DimensionCapError("min_norm: enumeration covers up to 12 weight vectors");
  for (int j = 0; j < K; ++j)
    if (inst.weights.col(j).norm() <= 1e-14)
      throw std::invalid_argument("min_norm: zero weight vector");

  const Eigen::MatrixXd wt = inst.weights.transpose();  // K x m

  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_z = Eigen::VectorXd::Zero(m);
  std::vector<int> members;
  for (unsigned mask = 1; mask < (1u << K); ++mask) {
    members.clear();
    for (int j = 0; j < K; ++j)
      if (mask & (1u << j)) members.push_back(j);
    const int sz = static_cast<int>(members.size());
    // sign of the first member fixed positive (z and -z are interchangeable)
    for (unsigned signs = 0; signs < (1u << (sz - 1)); ++signs) {
      Eigen::MatrixXd a(sz, m);
      for (int r = 0; r < sz; ++r) {
        const double eps = (r == 0) ? 1.0 : ((signs >> (r - 1)) & 1u) ? -1.0 : 1.0;
        a.row(r) = eps * wt.row(members[r]);
      }
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
      const Eigen::VectorXd z = cod.solve(Eigen::VectorXd::Ones(sz));
      if ((a * z - Eigen::VectorXd::Ones(sz)).lpNorm<Eigen::Infinity>() > 1e-9) continue;
      if (z.squaredNorm() >= best) continue;
      if (((wt * z).cwiseAbs().array() >= 1.0 - 1e-9).all()) {
        best = z.squaredNorm();
        best_z = z;
      }
    }
  }
  for (int i = 0; i < m; ++i) {
    if (std::abs(best_z(i)) > 1e-12) {
      if (best_z(i) < 0) best_z = -best_z;
      break;
    }
  }
  return {best, best_z};
}

MinNormReduction reduce_minnorm_to_minpower(const MinNormInstance& inst,
                                            const MinDistOptions& opts) {
  const int m = static_cast<int>(inst.weights.rows());
  // Step 1: single-row channel (1 0 ... 0)
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(1, m);
  h(0, 0) = 1.0;
  const Channel ch = Channel::from_matrix(h);
  // Step 2: the weight vectors become the (unstructured) difference set
  const DifferenceSet es = unstructured_set(inst.weights);
  // Step 3
  const DistanceResult mp = min_power(1.0, es, ch, opts);
  // Steps 4 and 5
  MinNormReduction out;
  out.t_star = *mp.power;
  out.z_star = mp.precoder->p.row(0).transpose();
  out.inner = mp;
  return out;
}

}  // namespace precopt
