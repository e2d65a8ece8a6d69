#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "precopt/mindist.hpp"
#include "precopt/rng.hpp"

using namespace precopt;

namespace {

const DifferenceSet kBpsk2Diffs = difference_set(make_constellation("bpsk", 2));

}  // namespace

TEST_CASE("minimum distance enumeration") {
  const Channel ch = Channel::from_matrix(Eigen::MatrixXd::Identity(2, 2));
  SUBCASE("bpsk square at identity") {
    const Precoder p = Precoder::from_matrix(Eigen::MatrixXd::Identity(2, 2));
    const DistanceResult r = d_min(ch, p, kBpsk2Diffs);
    CHECK(r.value == doctest::Approx(4.0));
    // lexicographically first achiever among the four axis differences
    CHECK(r.argmin_diff(0) == doctest::Approx(-2.0));
    CHECK(r.argmin_diff(1) == doctest::Approx(0.0));
  }
  SUBCASE("zero precoder") {
    const Precoder p = Precoder::from_matrix(Eigen::MatrixXd::Zero(2, 2));
    CHECK(d_min(ch, p, kBpsk2Diffs).value == 0.0);
  }
  SUBCASE("quadratic scaling is exact") {
    NormalSampler rng(71);
    const Eigen::MatrixXd pm = rng.matrix(2, 2);
    const double alpha = 3.7;
    const double base = d_min(ch, Precoder::from_matrix(pm), kBpsk2Diffs).value;
    const double scaled =
        d_min(ch, Precoder::from_matrix(std::sqrt(alpha) * pm), kBpsk2Diffs).value;
    CHECK(scaled == doctest::Approx(alpha * base).epsilon(1e-14));
  }
  SUBCASE("empty set rejected") {
    const Precoder p = Precoder::from_matrix(Eigen::MatrixXd::Identity(2, 2));
    DifferenceSet empty;
    empty.diffs.resize(2, 0);
    CHECK_THROWS_AS(d_min(ch, p, empty), std::invalid_argument);
  }
}

TEST_CASE("max-min distance: scalar program") {
  Eigen::MatrixXd h(1, 1);
  h << 2.0;  // lam^2 = 4
  const Channel ch = Channel::from_matrix(h);
  const DifferenceSet ds = difference_set(make_constellation("pam4", 1));
  const double min_e_sq = ds.diffs.row(0).array().square().minCoeff();
  const DistanceResult r = max_min_dist(3.0, ds, ch);
  CHECK(r.value == doctest::Approx(3.0 * 4.0 * min_e_sq).epsilon(1e-12));
  CHECK_FALSE(r.heuristic);
  CHECK(std::abs(*r.power - 3.0) <= 1e-12);
}

TEST_CASE("max-min distance: 2-dim exact path against random search") {
  const Channel ch = Channel::from_matrix(Eigen::MatrixXd::Identity(2, 2));
  const double rho = 2.0;
  const DistanceResult r = max_min_dist(rho, kBpsk2Diffs, ch);
  CHECK_FALSE(r.heuristic);
  CHECK(r.precoder->power == doctest::Approx(rho).epsilon(1e-10));

  NormalSampler rng(72);
  double best_random = 0.0;
  const Eigen::MatrixXd& diffs = kBpsk2Diffs.diffs;
  for (int trial = 0; trial < 1000000; ++trial) {
    Eigen::Matrix2d pm;
    pm << rng.next(), rng.next(), rng.next(), rng.next();
    pm *= std::sqrt(rho) / pm.norm();
    const Eigen::Matrix2d gram = pm.transpose() * pm;
    double mn = std::numeric_limits<double>::infinity();
    for (int e = 0; e < diffs.cols(); ++e)
      mn = std::min(mn, diffs.col(e).dot(gram * diffs.col(e)));
    best_random = std::max(best_random, mn);
  }
  CHECK(r.value >= best_random * (1.0 - 1e-3));
}

TEST_CASE("max-min distance scaling law is exact (fixed seed)") {
  const Channel ch = Channel::from_eigenvalues(Eigen::Vector2d(1.0, 0.5));
  const double rho = 1.37;
  const double alpha = 4.0;
  const DistanceResult base = max_min_dist(rho, kBpsk2Diffs, ch);
  const DistanceResult scaled = max_min_dist(alpha * rho, kBpsk2Diffs, ch);
  CHECK(scaled.value == doctest::Approx(alpha * base.value).epsilon(1e-14));
  CHECK((scaled.precoder->p - std::sqrt(alpha) * base.precoder->p).lpNorm<Eigen::Infinity>() <=
        1e-12 * base.precoder->p.lpNorm<Eigen::Infinity>());
}

TEST_CASE("minimum power program") {
  const Channel ch = Channel::from_eigenvalues(Eigen::Vector2d(1.0, 0.5));
  const DistanceResult base = max_min_dist(1.0, kBpsk2Diffs, ch);

  SUBCASE("fixed point at the unit-power distance") {
    const DistanceResult mp = min_power(base.value, kBpsk2Diffs, ch);
    CHECK(*mp.power == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((mp.precoder->p - base.precoder->p).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  SUBCASE("doubling the distance doubles the power") {
    const DistanceResult a = min_power(2.0, kBpsk2Diffs, ch);
    const DistanceResult b = min_power(4.0, kBpsk2Diffs, ch);
    CHECK(*b.power == doctest::Approx(2.0 * *a.power).epsilon(1e-12));
    CHECK((b.precoder->p - std::sqrt(2.0) * a.precoder->p).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  SUBCASE("round trip recovers the distance") {
    const DistanceResult mp = min_power(2.5, kBpsk2Diffs, ch);
    CHECK(mp.value >= 2.5 - 1e-8);
    const DistanceResult back = max_min_dist(*mp.power, kBpsk2Diffs, ch);
    CHECK(back.value == doctest::Approx(2.5).epsilon(1e-8));
  }
  SUBCASE("dead channel is infeasible") {
    const Channel zero = Channel::from_matrix(Eigen::MatrixXd::Zero(2, 2));
    CHECK_THROWS_AS(min_power(1.0, kBpsk2Diffs, zero), InfeasibleError);
  }
}

TEST_CASE("least-norm program") {
  SUBCASE("orthonormal constraints") {
    MinNormInstance inst;
    inst.weights = Eigen::MatrixXd::Identity(2, 2);
    const auto [t, z] = min_norm(inst);
    CHECK(t == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(z(0)) == doctest::Approx(1.0));
    CHECK(std::abs(z(1)) == doctest::Approx(1.0));
    CHECK(z(0) > 0);  // deterministic sign rule
  }
  SUBCASE("duplicate constraint") {
    MinNormInstance inst;
    inst.weights.resize(2, 2);
    inst.weights << 1, 1, 0, 0;
    const auto [t, z] = min_norm(inst);
    CHECK(t == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("worked oblique pair") {
    MinNormInstance inst;
    inst.weights.resize(2, 2);
    inst.weights << 1.0, 1.0 / std::sqrt(2.0), 0.0, 1.0 / std::sqrt(2.0);
    const auto [t, z] = min_norm(inst);
    const double expect = 1.0 + (std::sqrt(2.0) - 1.0) * (std::sqrt(2.0) - 1.0);
    CHECK(t == doctest::Approx(expect).epsilon(1e-10));
    CHECK(z(0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(z(1) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-8));
  }
  SUBCASE("feasibility always holds at the reported point") {
    NormalSampler rng(73);
    for (int trial = 0; trial < 20; ++trial) {
      const int m = 2 + trial % 3;
      MinNormInstance inst;
      inst.weights = rng.matrix(m, m);
      const auto [t, z] = min_norm(inst);
      CHECK(t == doctest::Approx(z.squaredNorm()).epsilon(1e-12));
      CHECK(((inst.weights.transpose() * z).cwiseAbs().array() >= 1.0 - 1e-8).all());
    }
  }
  SUBCASE("zero weight vector rejected") {
    MinNormInstance inst;
    inst.weights = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(min_norm(inst), std::invalid_argument);
  }
  SUBCASE("cap enforced") {
    MinNormInstance inst;
    inst.weights = Eigen::MatrixXd::Identity(13, 13);
    CHECK_THROWS_AS(min_norm(inst), DimensionCapError);
  }
}

TEST_CASE("reduction of the least-norm program to minimum power") {
  SUBCASE("matches the enumeration oracle and keeps the single-row structure") {
    NormalSampler rng(74);
    for (int trial = 0; trial < 10; ++trial) {
      const int m = 2 + trial % 3;
      MinNormInstance inst;
      inst.weights = rng.matrix(m, m);
      const auto [t_direct, z_direct] = min_norm(inst);
      const MinNormReduction red = reduce_minnorm_to_minpower(inst);
      CHECK(std::abs(red.t_star - t_direct) <= 1e-6 * std::max(1.0, t_direct));
      CHECK((red.z_star.cwiseAbs() - z_direct.cwiseAbs()).lpNorm<Eigen::Infinity>() <= 1e-6);
      // all rows of the inner precoder except the first vanish
      const Eigen::MatrixXd& pstar = red.inner.precoder->p;
      CHECK(pstar.bottomRows(pstar.rows() - 1).lpNorm<Eigen::Infinity>() <= 1e-8);
      // the returned vector satisfies every constraint
      CHECK(((inst.weights.transpose() * red.z_star).cwiseAbs().array() >= 1.0 - 1e-8).all());
    }
  }
  SUBCASE("worked oblique pair goes through the reduction") {
    MinNormInstance inst;
    inst.weights.resize(2, 2);
    inst.weights << 1.0, 1.0 / std::sqrt(2.0), 0.0, 1.0 / std::sqrt(2.0);
    const MinNormReduction red = reduce_minnorm_to_minpower(inst);
    CHECK(red.t_star ==
          doctest::Approx(1.0 + (std::sqrt(2.0) - 1.0) * (std::sqrt(2.0) - 1.0)).epsilon(1e-9));
  }
}

TEST_CASE("reduction of minimum power to max-min distance") {
  const Channel ch = Channel::from_eigenvalues(Eigen::Vector2d(1.0, 0.5));
  SUBCASE("identical to the minimum power front end") {
    const DistanceResult a = min_power(3.0, kBpsk2Diffs, ch);
    const DistanceResult b = reduce_minpower_to_maxmindist(3.0, kBpsk2Diffs, ch);
    CHECK(a.value == b.value);
    CHECK(*a.power == *b.power);
    CHECK((a.precoder->p - b.precoder->p).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("inner call runs at unit power") {
    const DistanceResult base = max_min_dist(1.0, kBpsk2Diffs, ch);
    CHECK(base.precoder->power == doctest::Approx(1.0).epsilon(1e-8));
  }
  SUBCASE("scaling consistency between thresholds") {
    const DistanceResult a = reduce_minpower_to_maxmindist(1.0, kBpsk2Diffs, ch);
    const DistanceResult b = reduce_minpower_to_maxmindist(4.0, kBpsk2Diffs, ch);
    CHECK((b.precoder->p - 2.0 * a.precoder->p).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("duality round trips on random instances") {
  NormalSampler rng(75);
  for (int trial = 0; trial < 10; ++trial) {
    const Channel ch = Channel::from_matrix(rng.matrix(2, 2));
    const double rho0 = 0.5 + 2.0 * rng.uniform();
    const DistanceResult fwd = max_min_dist(rho0, kBpsk2Diffs, ch);
    if (fwd.value <= 0) continue;
    const DistanceResult back = min_power(fwd.value, kBpsk2Diffs, ch);
    CHECK(*back.power == doctest::Approx(rho0).epsilon(1e-6));

    const double d0 = 0.3 + rng.uniform();
    const DistanceResult mp = min_power(d0, kBpsk2Diffs, ch);
    const DistanceResult mmd = max_min_dist(*mp.power, kBpsk2Diffs, ch);
    CHECK(mmd.value == doctest::Approx(d0).epsilon(1e-6));
  }
}

TEST_CASE("three-dimensional heuristic path") {
  const DifferenceSet ds3 = difference_set(make_constellation("bpsk", 3));
  REQUIRE(ds3.count() <= 64);
  const Channel ch = Channel::from_eigenvalues(Eigen::Vector3d(1.0, 0.8, 0.6));
  MinDistOptions opts;
  opts.softmin_restarts = 8;
  opts.softmin_steps_per_stage = 15;
  const double rho = 3.0;
  const DistanceResult r = max_min_dist(rho, ds3, ch, opts);
  CHECK(r.heuristic);
  CHECK(r.precoder->power == doctest::Approx(rho).epsilon(1e-8));
  // never worse than the axis-aligned uniform baseline
  const Precoder uniform = Precoder::from_factors(
      ch.eig_vectors, Eigen::Vector3d::Constant(std::sqrt(rho / 3.0)),
      Eigen::MatrixXd::Identity(3, 3));
  CHECK(r.value >= d_min(ch, uniform, ds3).value - 1e-9);
}

TEST_CASE("dimension caps raise the capability error") {
  const DifferenceSet ds4 = difference_set(make_constellation("bpsk", 4));
  const Channel ch = Channel::from_matrix(Eigen::MatrixXd::Identity(4, 4));
  CHECK_THROWS_AS(max_min_dist(1.0, ds4, ch), DimensionCapError);
}
