#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "precopt/channel.hpp"

namespace precopt {

struct DimensionCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MinNormInstance {
  Eigen::MatrixXd weights;  // m x K, one column per weight vector, all nonzero
};

struct DistanceResult {
  double value = 0.0;            // squared distance
  Eigen::VectorXd argmin_diff;   // achieving difference vector
  std::optional<Precoder> precoder;
  std::optional<double> power;
  bool heuristic = false;        // true when the smoothed search produced it
};

struct MinDistOptions {
  int theta_grid = 720;          // rotation grid of the exact 2-d path
  int refine_rounds = 3;
  int softmin_stages = 20;       // temperature annealing, 1.0 down to 1e-3
  double softmin_t_init = 1.0;
  double softmin_t_final = 1e-3;
  int softmin_restarts = 16;
  int softmin_steps_per_stage = 25;
  std::uint64_t seed = 1;
};

/// Exact minimum of e^T P^T R_H P e over the set, lexicographic tie-break.
DistanceResult d_min(const Channel& ch, const Precoder& prec, const DifferenceSet& ds);

// Best-found precoder maximizing the minimum squared distance at transmit
// power rho. Exact paths: m == 1, rank-one channels (via the least-norm
// duality, up to 12 sign-distinct differences), and m == 2 (grid plus
// refinement over the power split and rotation angle). m == 3 runs the
// annealed softmin multi-start and flags the result heuristic.
DistanceResult max_min_dist(double rho, const DifferenceSet& ds, const Channel& ch,
                            const MinDistOptions& opts = {});

/// Minimum transmit power reaching squared distance d, by the scaling
/// reduction through max_min_dist.
DistanceResult min_power(double d, const DifferenceSet& ds, const Channel& ch,
                         const MinDistOptions& opts = {});

// Exact solution of min ||z||^2 s.t. |w_i^T z| >= 1 by sign-pattern and
// active-subset enumeration (up to 12 weight vectors). The returned vector's
// first nonzero coordinate is positive.
std::pair<double, Eigen::VectorXd> min_norm(const MinNormInstance& inst);

struct MinNormReduction {
  double t_star = 0.0;
  Eigen::VectorXd z_star;
  DistanceResult inner;  // the min_power output the reduction consumed
};

// Five literal steps: H = (1 0 ... 0), E = {w_i}, {rho*, P*} = MinPower(1, E, H),
// t* = rho*, z* = first row of P*.
MinNormReduction reduce_minnorm_to_minpower(const MinNormInstance& inst,
                                            const MinDistOptions& opts = {});

// Three literal steps: {d0*, P0*} = MaxMinDist(1, E, H), rho* = d/d0*,
// P* = sqrt(d/d0*) P0*.
DistanceResult reduce_minpower_to_maxmindist(double d, const DifferenceSet& ds, const Channel& ch,
                                             const MinDistOptions& opts = {});

}  // namespace precopt
