#include "precopt/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace precopt {

namespace {

// Deterministic column signs: first entry with magnitude above tolerance is
// made positive.
void fix_column_signs(Eigen::MatrixXd& m) {
  for (int j = 0; j < m.cols(); ++j) {
    for (int i = 0; i < m.rows(); ++i) {
      if (std::abs(m(i, j)) > 1e-12) {
        if (m(i, j) < 0) m.col(j) = -m.col(j);
        break;
      }
    }
  }
}

constexpr int kMaxAlphabet = 1024;

Eigen::MatrixXd per_dim_generator(const std::string& name, int& width) {
  // columns are base points; rows are the dims one group spans
  if (name == "bpsk") {
    width = 1;
    Eigen::MatrixXd g(1, 2);
    g << -1.0, 1.0;
    return g;
  }
  if (name == "pam4") {
    width = 1;
    Eigen::MatrixXd g(1, 4);
    g << -3.0, -1.0, 1.0, 3.0;
    return g / std::sqrt(5.0);
  }
  if (name == "qpsk-as-2d") {
    width = 2;
    Eigen::MatrixXd g(2, 4);
    g << -1, -1, 1, 1,
         -1, 1, -1, 1;
    return g;
  }
  if (name == "qam16-as-2d") {
    width = 2;
    Eigen::MatrixXd g(2, 16);
    int c = 0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        g(0, c) = (2 * a - 3);
        g(1, c) = (2 * b - 3);
        ++c;
      }
    return g / std::sqrt(5.0);
  }
  throw std::invalid_argument("make_constellation: unknown builtin '" + name + "'");
}

}  // namespace

Channel Channel::from_matrix(const Eigen::MatrixXd& h) {
  Channel ch;
  ch.h = h;
  ch.gram = h.transpose() * h;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ch.gram);
  const int p = static_cast<int>(ch.gram.rows());
  // solver returns ascending order; re-sort nonincreasing with stable ties
  std::vector<int> idx(p);
  std::iota(idx.begin(), idx.end(), 0);
  const Eigen::VectorXd vals = es.eigenvalues();
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return vals(a) > vals(b); });
  ch.eig_values_sq.resize(p);
  ch.eig_vectors.resize(p, p);
  for (int j = 0; j < p; ++j) {
    ch.eig_values_sq(j) = std::max(0.0, vals(idx[j]));
    ch.eig_vectors.col(j) = es.eigenvectors().col(idx[j]);
  }
  fix_column_signs(ch.eig_vectors);
  return ch;
}

Channel Channel::from_eigenvalues(const Eigen::VectorXd& lam_sq) {
  const int p = static_cast<int>(lam_sq.size());
  for (int i = 0; i < p; ++i)
    if (lam_sq(i) < 0) throw std::invalid_argument("from_eigenvalues: negative squared gain");
  Channel ch;
  ch.h = lam_sq.cwiseSqrt().asDiagonal();
  ch.gram = lam_sq.asDiagonal();
  std::vector<int> idx(p);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return lam_sq(a) > lam_sq(b); });
  ch.eig_values_sq.resize(p);
  ch.eig_vectors = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) {
    ch.eig_values_sq(j) = lam_sq(idx[j]);
    ch.eig_vectors(idx[j], j) = 1.0;
  }
  return ch;
}

Constellation make_constellation(const std::string& name, int dims) {
  if (dims < 1) throw std::invalid_argument("make_constellation: dims >= 1 required");
  int width = 1;
  const Eigen::MatrixXd gen = per_dim_generator(name, width);
  if (dims % width != 0)
    throw std::invalid_argument("make_constellation: dims must be a multiple of " +
                                std::to_string(width) + " for " + name);
  const int groups = dims / width;
  const int base = static_cast<int>(gen.cols());
  double lcount = std::pow(static_cast<double>(base), groups);
  if (lcount > kMaxAlphabet)
    throw std::invalid_argument("make_constellation: alphabet larger than 1024 points");
  const int L = static_cast<int>(std::lround(lcount));

  Constellation c;
  c.points.resize(dims, L);
  c.priors = Eigen::VectorXd::Constant(L, 1.0 / L);
  std::vector<int> counter(groups, 0);
  for (int col = 0; col < L; ++col) {
    for (int g = 0; g < groups; ++g)
      c.points.block(g * width, col, width, 1) = gen.col(counter[g]);
    for (int g = 0; g < groups; ++g) {
      if (++counter[g] < base) break;
      counter[g] = 0;
    }
  }
  return c;
}

Constellation normalize(const Eigen::MatrixXd& points, const Eigen::VectorXd& priors) {
  const int L = static_cast<int>(points.cols());
  if (priors.size() != L) throw std::invalid_argument("normalize: priors length mismatch");
  if (priors.minCoeff() < 0) throw std::invalid_argument("normalize: negative prior");
  if (std::abs(priors.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("normalize: priors must sum to 1");
  if (L > kMaxAlphabet) throw std::invalid_argument("normalize: alphabet larger than 1024 points");

  const Eigen::VectorXd mean = points * priors;
  const Eigen::MatrixXd centered = points.colwise() - mean;
  const Eigen::MatrixXd cov =
      centered * priors.asDiagonal() * centered.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const double emax = es.eigenvalues().maxCoeff();
  if (emax <= 0 || es.eigenvalues().minCoeff() < 1e-12 * emax)
    throw std::invalid_argument("normalize: degenerate alphabet (singular covariance)");
  const Eigen::MatrixXd whitener = es.eigenvectors() *
                                   es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                                   es.eigenvectors().transpose();
  Constellation c;
  c.points = whitener * centered;
  c.priors = priors;
  return c;
}

Precoder Precoder::from_matrix(const Eigen::MatrixXd& p) {
  Precoder out;
  out.p = p;
  out.svd = svd_factors(p);
  out.power = p.squaredNorm();
  return out;
}

Precoder Precoder::from_factors(const Eigen::MatrixXd& u_cols, const Eigen::VectorXd& sigma,
                                const Eigen::MatrixXd& v) {
  const int k = static_cast<int>(sigma.size());
  if (u_cols.cols() != k || v.cols() < k)
    throw std::invalid_argument("from_factors: factor shape mismatch");
  if ((u_cols.transpose() * u_cols - Eigen::MatrixXd::Identity(k, k)).norm() > 1e-8 ||
      (v.transpose() * v - Eigen::MatrixXd::Identity(v.cols(), v.cols())).norm() > 1e-8)
    throw std::invalid_argument("from_factors: factors not orthonormal");
  for (int i = 0; i + 1 < k; ++i)
    if (sigma(i) < sigma(i + 1) - 1e-12)
      throw std::invalid_argument("from_factors: singular values not sorted");
  if (k > 0 && sigma(k - 1) < -1e-12)
    throw std::invalid_argument("from_factors: negative singular value");

  Precoder out;
  out.p = u_cols * sigma.asDiagonal() * v.leftCols(k).transpose();
  out.svd = SvdFactors{u_cols, sigma, v};
  out.power = sigma.squaredNorm();
  return out;
}

DifferenceSet difference_set(const Constellation& c) {
  const int L = c.size();
  if (L < 2) throw std::invalid_argument("difference_set: at least two points required");
  std::vector<Eigen::VectorXd> diffs;
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j) {
      if (i == j) continue;
      Eigen::VectorXd e = c.points.col(i) - c.points.col(j);
      if (e.lpNorm<Eigen::Infinity>() <= 1e-12) continue;  // duplicated points
      bool seen = false;
      for (const auto& d : diffs)
        if ((d - e).lpNorm<Eigen::Infinity>() <= 1e-12) {
          seen = true;
          break;
        }
      if (!seen) diffs.push_back(std::move(e));
    }
  // lexicographic order for deterministic downstream tie-breaking
  std::sort(diffs.begin(), diffs.end(), [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (int i = 0; i < a.size(); ++i) {
      if (a(i) != b(i)) return a(i) < b(i);
    }
    return false;
  });
  DifferenceSet ds;
  ds.source = DifferenceSet::Source::derived_from_constellation;
  ds.diffs.resize(c.dims(), static_cast<int>(diffs.size()));
  for (int j = 0; j < ds.diffs.cols(); ++j) ds.diffs.col(j) = diffs[j];
  return ds;
}

DifferenceSet unstructured_set(const Eigen::MatrixXd& diffs) {
  DifferenceSet ds;
  ds.diffs = diffs;
  ds.source = DifferenceSet::Source::unstructured;
  return ds;
}

Channel whiten(const Eigen::MatrixXd& h, const Eigen::MatrixXd& noise_cov) {
  if (noise_cov.rows() != h.rows() || noise_cov.cols() != h.rows())
    throw std::invalid_argument("whiten: noise covariance shape mismatch");
  if ((noise_cov - noise_cov.transpose()).norm() > 1e-10 * (1.0 + noise_cov.norm()))
    throw std::invalid_argument("whiten: noise covariance not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(noise_cov);
  const double emax = es.eigenvalues().maxCoeff();
  if (emax <= 0 || es.eigenvalues().minCoeff() <= 1e-12 * emax)
    throw std::invalid_argument("whiten: noise covariance not positive definite");
  const Eigen::MatrixXd inv_sqrt = es.eigenvectors() *
                                   es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                                   es.eigenvectors().transpose();
  return Channel::from_matrix(inv_sqrt * h);
}

Eigen::VectorXd sufficient_statistic(const Channel& ch, const Precoder& prec,
                                     const Eigen::VectorXd& y) {
  if (y.size() != ch.rx_dims()) throw std::invalid_argument("sufficient_statistic: dim mismatch");
  return prec.p.transpose() * ch.h.transpose() * y;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> effective_model(const Channel& ch,
                                                            const Precoder& prec) {
  const int p = prec.out_dims();
  const int m = prec.in_dims();
  if (ch.tx_dims() != p) throw std::invalid_argument("effective_model: dim mismatch");
  const int k = std::min(p, m);
  if (prec.svd.v.cols() != m)
    throw std::invalid_argument("effective_model: full right factor required");

  const double scale = std::max(1.0, ch.eig_values_sq.maxCoeff()) * std::max(1.0, prec.power);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(k, m);
  for (int j = 0; j < k; ++j) {
    const double sig = prec.svd.singvals(j);
    if (sig <= 1e-14) continue;
    const Eigen::VectorXd u = prec.svd.u.col(j);
    const double lam_sq = u.dot(ch.gram * u);
    // powered left modes must be channel eigenvectors
    if ((ch.gram * u - lam_sq * u).norm() > 1e-8 * std::sqrt(scale))
      throw std::invalid_argument("effective_model: precoder not aligned with channel eigenbasis");
    g(j, j) = std::sqrt(std::max(0.0, lam_sq)) * sig;
  }
  return {g, prec.svd.v.transpose()};
}

}  // namespace precopt
