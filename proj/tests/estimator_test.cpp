#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "precopt/estimator.hpp"
#include "precopt/quadrature.hpp"
#include "precopt/rng.hpp"

using namespace precopt;

namespace {

IntegrationConfig gh_cfg(int nodes = 24) {
  IntegrationConfig cfg;
  cfg.method = IntegrationConfig::Method::gauss_hermite;
  cfg.nodes_per_dim = nodes;
  return cfg;
}

// scalar BPSK mmse(gamma) = 1 - E[tanh(gamma + sqrt(gamma) u)], by 1-D
// quadrature of the closed-form integrand
double scalar_bpsk_mmse_oracle(double gamma, int nodes = 40) {
  const GaussHermiteRule rule = gauss_hermite(nodes);
  double acc = 0.0;
  for (int i = 0; i < nodes; ++i)
    acc += rule.weights(i) * std::tanh(gamma + std::sqrt(gamma) * rule.nodes(i));
  return 1.0 - acc;
}

}  // namespace

TEST_CASE("posterior mean") {
  const Constellation c = make_constellation("bpsk", 2);
  SUBCASE("zero channel returns the prior mean") {
    const Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 2);
    const Eigen::VectorXd mean = posterior_mean(g, c, Eigen::Vector2d(0.3, -0.7));
    CHECK(mean.lpNorm<Eigen::Infinity>() <= 1e-14);
  }
  SUBCASE("high gain pins the posterior to the transmitted point") {
    const Eigen::MatrixXd g = 50.0 * Eigen::MatrixXd::Identity(2, 2);
    const Eigen::VectorXd y = g * c.points.col(2);
    CHECK((posterior_mean(g, c, y) - c.points.col(2)).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
  SUBCASE("scalar bpsk posterior is tanh(g y)") {
    const Constellation c1 = make_constellation("bpsk", 1);
    Eigen::MatrixXd g(1, 1);
    g << 1.3;
    for (double y : {-2.0, -0.5, 0.0, 0.8, 3.0}) {
      const Eigen::VectorXd mean = posterior_mean(g, c1, Eigen::VectorXd::Constant(1, y));
      CHECK(mean(0) == doctest::Approx(std::tanh(1.3 * y)).epsilon(1e-12));
    }
  }
  SUBCASE("weights survive large observations") {
    const Constellation c1 = make_constellation("bpsk", 1);
    Eigen::MatrixXd g(1, 1);
    g << 1.0;
    const Eigen::VectorXd mean = posterior_mean(g, c1, Eigen::VectorXd::Constant(1, 1e3));
    CHECK(std::isfinite(mean(0)));
    CHECK(mean(0) == doctest::Approx(1.0));
  }
}

TEST_CASE("mmse matrix limits") {
  const Constellation c = make_constellation("bpsk", 2);
  SUBCASE("zero gain leaves the prior covariance") {
    const MmseStats st = mmse_stats(Eigen::MatrixXd::Zero(2, 2), c, gh_cfg());
    CHECK((st.mmse_matrix - Eigen::MatrixXd::Identity(2, 2)).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  SUBCASE("large gain drives the error to zero") {
    const MmseStats st = mmse_stats(40.0 * Eigen::MatrixXd::Identity(2, 2), c, gh_cfg());
    CHECK(st.mmse_matrix.lpNorm<Eigen::Infinity>() <= 1e-8);
  }
  SUBCASE("scalar bpsk at unit SNR matches the quadrature oracle") {
    const Constellation c1 = make_constellation("bpsk", 1);
    Eigen::MatrixXd g(1, 1);
    g << 1.0;
    const MmseStats st = mmse_stats(g, c1, gh_cfg(30));
    const double oracle = scalar_bpsk_mmse_oracle(1.0);
    CHECK(oracle == doctest::Approx(0.449600).epsilon(2e-4));  // frozen oracle value
    CHECK(st.mmse_diag(0) == doctest::Approx(oracle).epsilon(2e-4));
  }
  SUBCASE("trace never exceeds the prior variance") {
    NormalSampler rng(7);
    const IntegrationConfig cfg = gh_cfg();
    for (int trial = 0; trial < 5; ++trial) {
      const MmseStats st = mmse_stats(rng.matrix(2, 2), c, cfg);
      CHECK(st.mmse_matrix.trace() <= 2.0 + 1e-9);
      CHECK((st.mmse_matrix - st.mmse_matrix.transpose()).lpNorm<Eigen::Infinity>() <= 1e-10);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(st.mmse_matrix);
      CHECK(es.eigenvalues().minCoeff() >= -1e-9);
      CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("per-mode mmse separates for product alphabets at identity rotation") {
  const Constellation c = make_constellation("bpsk", 2);
  const Eigen::VectorXd lam_sq = Eigen::Vector2d(1.5, 0.4);
  const Eigen::VectorXd sig_sq = Eigen::Vector2d(0.9, 1.7);
  const Eigen::VectorXd mm =
      mmse_diag_for_model(lam_sq, sig_sq, Eigen::MatrixXd::Identity(2, 2), c, gh_cfg(28));
  for (int i = 0; i < 2; ++i) {
    const double gamma = lam_sq(i) * sig_sq(i);
    CHECK(mm(i) == doctest::Approx(scalar_bpsk_mmse_oracle(gamma)).epsilon(2e-4));
  }
}

TEST_CASE("zero power gives unit mmse on every mode") {
  const Constellation c = make_constellation("bpsk", 2);
  const Eigen::VectorXd mm = mmse_diag_for_model(
      Eigen::Vector2d(2.0, 1.0), Eigen::Vector2d(0.0, 0.0), Eigen::MatrixXd::Identity(2, 2), c,
      gh_cfg());
  CHECK(mm(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mm(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gaussian surrogate closed forms") {
  const Eigen::VectorXd lam_sq = Eigen::Vector2d(2.0, 0.5);
  const Eigen::VectorXd sig_sq = Eigen::Vector2d(1.0, 3.0);
  const Eigen::VectorXd mm = gaussian_mmse_diag(lam_sq, sig_sq);
  CHECK(mm(0) == doctest::Approx(1.0 / 3.0));
  CHECK(mm(1) == doctest::Approx(1.0 / 2.5));
  const Eigen::MatrixXd j = gaussian_mmse_jacobian(lam_sq, sig_sq);
  CHECK(j(0, 0) == doctest::Approx(-2.0 / 9.0));
  CHECK(j(0, 1) == 0.0);

  NormalSampler rng(9);
  const Eigen::MatrixXd b = rng.matrix(3, 2);
  const Eigen::MatrixXd e = gaussian_mmse_matrix(b);
  const Eigen::MatrixXd direct =
      (Eigen::MatrixXd::Identity(2, 2) + b.transpose() * b).inverse();
  CHECK((e - direct).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("conditional covariance moments") {
  const Constellation c = make_constellation("bpsk", 2);
  SUBCASE("no observation: Phi is the identity prior covariance") {
    const PhiMoments ph = phi_moments(Eigen::Vector2d(2.0, 1.0), Eigen::Vector2d(0.0, 0.0),
                                      Eigen::MatrixXd::Identity(2, 2), c, gh_cfg());
    CHECK((ph.phi_sq - Eigen::MatrixXd::Identity(2, 2)).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  SUBCASE("scalar bpsk second moment matches quadrature of (1 - tanh^2)^2") {
    const Constellation c1 = make_constellation("bpsk", 1);
    const double gamma = 1.3;
    const PhiMoments ph =
        phi_moments(Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, gamma),
                    Eigen::MatrixXd::Identity(1, 1), c1, gh_cfg(30));
    const GaussHermiteRule rule = gauss_hermite(40);
    const double g = std::sqrt(gamma);
    double oracle = 0.0;
    for (int s = -1; s <= 1; s += 2)
      for (int i = 0; i < rule.nodes.size(); ++i) {
        const double y = g * s + rule.nodes(i);
        const double phi = 1.0 - std::tanh(g * y) * std::tanh(g * y);
        oracle += 0.5 * rule.weights(i) * phi * phi;
      }
    CHECK(ph.phi_sq(0, 0) == doctest::Approx(oracle).epsilon(1e-4));
  }
  SUBCASE("symmetric in the mode indices") {
    NormalSampler rng(12);
    const Eigen::MatrixXd v = Eigen::HouseholderQR<Eigen::MatrixXd>(rng.matrix(2, 2))
                                  .householderQ() *
                              Eigen::MatrixXd::Identity(2, 2);
    const PhiMoments ph =
        phi_moments(Eigen::Vector2d(1.0, 0.7), Eigen::Vector2d(0.8, 1.2), v, c, gh_cfg());
    CHECK(ph.phi_sq(0, 1) == doctest::Approx(ph.phi_sq(1, 0)).epsilon(1e-10));
    CHECK(ph.phi_sq.minCoeff() >= 0.0);
  }
}

TEST_CASE("mmse jacobian") {
  const Constellation c = make_constellation("bpsk", 2);
  const Eigen::VectorXd lam_sq = Eigen::Vector2d(1.2, 0.6);

  SUBCASE("zero power: J = -diag(lam^2)") {
    const Eigen::MatrixXd j = mmse_jacobian(lam_sq, Eigen::Vector2d(0.0, 0.0),
                                            Eigen::MatrixXd::Identity(2, 2), c, gh_cfg());
    CHECK(j(0, 0) == doctest::Approx(-1.2).epsilon(1e-10));
    CHECK(j(1, 1) == doctest::Approx(-0.6).epsilon(1e-10));
    CHECK(std::abs(j(0, 1)) <= 1e-12);
  }

  SUBCASE("matches central finite differences (quadrature path)") {
    NormalSampler rng(13);
    for (int trial = 0; trial < 4; ++trial) {
      const Eigen::MatrixXd v = Eigen::HouseholderQR<Eigen::MatrixXd>(rng.matrix(2, 2))
                                    .householderQ() *
                                Eigen::MatrixXd::Identity(2, 2);
      Eigen::VectorXd sig_sq(2);
      sig_sq << 0.4 + rng.uniform(), 0.4 + rng.uniform();
      const IntegrationConfig cfg = gh_cfg(24);
      const Eigen::MatrixXd j = mmse_jacobian(lam_sq, sig_sq, v, c, cfg);
      const double h = 1e-3;
      for (int col = 0; col < 2; ++col) {
        Eigen::VectorXd up = sig_sq, dn = sig_sq;
        up(col) += h;
        dn(col) -= h;
        const Eigen::VectorXd fd = (mmse_diag_for_model(lam_sq, up, v, c, cfg) -
                                    mmse_diag_for_model(lam_sq, dn, v, c, cfg)) /
                                   (2 * h);
        for (int row = 0; row < 2; ++row)
          CHECK(std::abs(j(row, col) - fd(row)) <= 5e-3);
      }
      CHECK(j(0, 0) <= 0.0);
      CHECK(j(1, 1) <= 0.0);
    }
  }

  SUBCASE("matches finite differences under common random numbers") {
    const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(2, 2);
    IntegrationConfig cfg;  // Monte Carlo
    cfg.samples = 40000;
    cfg.seed = 77;
    const Eigen::VectorXd sig_sq = Eigen::Vector2d(0.8, 1.1);
    const Eigen::MatrixXd j = mmse_jacobian(lam_sq, sig_sq, v, c, cfg);
    const PhiMoments ph = phi_moments(lam_sq, sig_sq, v, c, cfg);
    const double h = 1e-3;
    for (int col = 0; col < 2; ++col) {
      Eigen::VectorXd up = sig_sq, dn = sig_sq;
      up(col) += h;
      dn(col) -= h;
      const Eigen::VectorXd fd = (mmse_diag_for_model(lam_sq, up, v, c, cfg) -
                                  mmse_diag_for_model(lam_sq, dn, v, c, cfg)) /
                                 (2 * h);
      for (int row = 0; row < 2; ++row) {
        const double tol = std::max(5e-3, 3.0 * lam_sq(col) * ph.stderrs(row, col));
        CHECK(std::abs(j(row, col) - fd(row)) <= tol);
      }
    }
  }
}

TEST_CASE("determinism and budget control") {
  const Constellation c = make_constellation("bpsk", 2);
  IntegrationConfig cfg;
  cfg.samples = 5000;
  cfg.seed = 31337;
  NormalSampler rng(14);
  const Eigen::MatrixXd g = rng.matrix(2, 2);

  const MmseStats a = mmse_stats(g, c, cfg);
  const MmseStats b = mmse_stats(g, c, cfg);
  CHECK((a.mmse_matrix - b.mmse_matrix).lpNorm<Eigen::Infinity>() == 0.0);

  cfg.seed = 31338;
  const MmseStats d = mmse_stats(g, c, cfg);
  CHECK((a.mmse_matrix - d.mmse_matrix).lpNorm<Eigen::Infinity>() > 0.0);

  SUBCASE("unreachable stderr target raises the budget error") {
    IntegrationConfig tight = cfg;
    tight.stderr_target = 1e-12;
    CHECK_THROWS_AS(mmse_stats(g, c, tight), IntegrationBudgetError);
  }
  SUBCASE("config validation") {
    IntegrationConfig bad;
    bad.samples = 10;
    CHECK_THROWS_AS(mmse_stats(g, c, bad), std::invalid_argument);
    IntegrationConfig ghbad = gh_cfg(2);
    CHECK_THROWS_AS(mmse_stats(g, c, ghbad), std::invalid_argument);
  }
}
