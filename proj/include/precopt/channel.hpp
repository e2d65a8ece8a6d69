#pragma once

#include <string>
#include <utility>

#include <Eigen/Dense>

#include "precopt/matcalc.hpp"

namespace precopt {

// Linear model y = H P s + z with z ~ N(0, I). The Gram R_H = H^T H and its
// eigendecomposition U_H Lam^2 U_H^T (eigenvalues nonincreasing, stable tie
// order, deterministic column signs) are cached at construction.
struct Channel {
  Eigen::MatrixXd h;              // n x p
  Eigen::MatrixXd gram;           // p x p
  Eigen::MatrixXd eig_vectors;    // U_H, p x p
  Eigen::VectorXd eig_values_sq;  // diag of Lam^2

  static Channel from_matrix(const Eigen::MatrixXd& h);
  /// Diagonal channel with the given squared gains.
  static Channel from_eigenvalues(const Eigen::VectorXd& lam_sq);

  int rx_dims() const { return static_cast<int>(h.rows()); }
  int tx_dims() const { return static_cast<int>(h.cols()); }
};

// Finite input alphabet, zero mean and identity covariance under the priors.
struct Constellation {
  Eigen::MatrixXd points;  // m x L, one column per point
  Eigen::VectorXd priors;  // L, sums to 1

  int dims() const { return static_cast<int>(points.rows()); }
  int size() const { return static_cast<int>(points.cols()); }
};

/// Builtins: bpsk, pam4, qpsk-as-2d, qam16-as-2d (i.i.d. product across dims).
Constellation make_constellation(const std::string& name, int dims);

/// Mean-shift and covariance-whiten user points so the Constellation
/// invariants hold under the given priors.
Constellation normalize(const Eigen::MatrixXd& points, const Eigen::VectorXd& priors);

struct Precoder {
  Eigen::MatrixXd p;  // p x m
  SvdFactors svd;
  double power = 0.0;  // Tr(P P^T)

  static Precoder from_matrix(const Eigen::MatrixXd& p);
  // Assembles u_cols * diag(sigma) * v.leftCols(k)^T and keeps the provided
  // factors (u_cols: p x k orthonormal, v: m x m orthonormal, sigma
  // nonincreasing and nonnegative).
  static Precoder from_factors(const Eigen::MatrixXd& u_cols, const Eigen::VectorXd& sigma,
                               const Eigen::MatrixXd& v);

  int in_dims() const { return static_cast<int>(p.cols()); }
  int out_dims() const { return static_cast<int>(p.rows()); }
};

struct DifferenceSet {
  enum class Source { derived_from_constellation, unstructured };
  Eigen::MatrixXd diffs;  // m x K, one column per difference vector
  Source source = Source::unstructured;

  int count() const { return static_cast<int>(diffs.cols()); }
};

/// All pairwise differences s_i - s_j, i != j, deduplicated.
DifferenceSet difference_set(const Constellation& c);

DifferenceSet unstructured_set(const Eigen::MatrixXd& diffs);

/// Channel built from R_z^{-1/2} H; the resulting model has identity noise
/// covariance.
Channel whiten(const Eigen::MatrixXd& h, const Eigen::MatrixXd& noise_cov);

/// P^T H^T y.
Eigen::VectorXd sufficient_statistic(const Channel& ch, const Precoder& prec,
                                     const Eigen::VectorXd& y);

// Diagonalized model for an aligned precoder: returns (G, V^T) with G the
// k x m map diag(lam_i sigma_i) on the leading k = min(p, m) modes, such
// that y' = G V^T s + z carries the same information as the original model.
// Throws if the precoder's left factor does not sit in the channel
// eigenbasis on the powered modes.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> effective_model(const Channel& ch,
                                                            const Precoder& prec);

}  // namespace precopt
