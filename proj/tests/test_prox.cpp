#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "newsfactor/error.hpp"
#include "newsfactor/prox.hpp"
#include "support/oracles.hpp"

namespace nf = newsfactor;
using nf::prox::ProxParams;
using Eigen::VectorXd;

namespace {

ProxParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lam(0.0, 2.0), mu(0.0, 0.5), rho(0.5, 2.0);
  return {lam(rng), mu(rng), rho(rng)};
}

}  // namespace

TEST(Prox, NoPenaltyReturnsV) {
  std::mt19937_64 rng(1);
  const VectorXd v = nf::testing::gaussian(rng, 7, 1);
  EXPECT_LE((nf::prox::sparse_group_prox(v, {0.0, 0.0, 1.7}) - v).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Prox, SmallEntriesVanish) {
  VectorXd v(4);
  v << 0.3, -0.5, 0.0, 0.49;
  const VectorXd u = nf::prox::sparse_group_prox(v, {0.0, 1.0, 2.0});
  EXPECT_EQ(u, VectorXd::Zero(4));
}

TEST(Prox, HandInstanceMatchesOracle) {
  VectorXd v(2);
  v << 3.0, -1.0;
  const ProxParams p{1.0, 1.0, 1.0};
  const VectorXd u = nf::prox::sparse_group_prox(v, p);
  const VectorXd ref = nf::testing::prox_subgradient_oracle(v, p);
  EXPECT_LE((u - ref).cwiseAbs().maxCoeff(), 1e-4);
  // w = (2, 0), so u = (2 - 1) / 2 * w.
  EXPECT_DOUBLE_EQ(u(0), 1.0);
  EXPECT_DOUBLE_EQ(u(1), 0.0);
}

TEST(Prox, GroupBelowLambdaIsZero) {
  VectorXd v(3);
  v << 0.6, -0.8, 0.0;
  // w = v, ||w|| = 1 <= lambda.
  EXPECT_EQ(nf::prox::sparse_group_prox(v, {1.0, 0.0, 1.0}), VectorXd::Zero(3));
}

TEST(Prox, ZeroInputKeepsSignConvention) {
  const VectorXd u = nf::prox::sparse_group_prox(VectorXd::Zero(5), {0.0, 0.0, 1.0});
  EXPECT_EQ(u, VectorXd::Zero(5));
}

TEST(Prox, InvalidParamsThrow) {
  const VectorXd v = VectorXd::Ones(2);
  EXPECT_THROW(nf::prox::sparse_group_prox(v, {-1.0, 0.0, 1.0}), nf::ConfigError);
  EXPECT_THROW(nf::prox::sparse_group_prox(v, {0.0, -1.0, 1.0}), nf::ConfigError);
  EXPECT_THROW(nf::prox::sparse_group_prox(v, {0.0, 0.0, 0.0}), nf::ConfigError);
}

TEST(ProxProperty, OptimalityCertificate) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> dim(1, 50);
  for (int trial = 0; trial < 200; ++trial) {
    const ProxParams p = random_params(rng);
    const VectorXd v = nf::testing::gaussian(rng, dim(rng), 1);
    const VectorXd u = nf::prox::sparse_group_prox(v, p);
    EXPECT_LE(nf::testing::prox_certificate(u, v, p), 1e-8);
  }
}

TEST(ProxProperty, NoProbeDoesBetter) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ProxParams p = random_params(rng);
    const VectorXd v = nf::testing::gaussian(rng, 8, 1);
    const VectorXd u = nf::prox::sparse_group_prox(v, p);
    const double best = nf::prox::sparse_group_objective(u, v, p);
    for (int k = 0; k < 1000; ++k) {
      const VectorXd z = u + nf::testing::gaussian(rng, 8, 1, k % 2 ? 0.01 : 1.0);
      EXPECT_LE(best, nf::prox::sparse_group_objective(z, v, p) + 1e-8);
    }
  }
}

TEST(ProxProperty, NormShrinksAsLambdaGrows) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd v = nf::testing::gaussian(rng, 10, 1);
    double last = INFINITY;
    for (double lam = 0.0; lam < 6.0; lam += 0.05) {
      const double norm = nf::prox::sparse_group_prox(v, {lam, 0.1, 1.0}).norm();
      EXPECT_LE(norm, last);
      last = norm;
    }
  }
}

TEST(ProxProperty, ContinuousAtGroupThreshold) {
  VectorXd v(3);
  v << 1.0, 2.0, -2.0;
  const ProxParams base{0.0, 0.0, 1.0};
  const double edge = v.norm();  // ||w|| with mu = 0, rho = 1
  for (const double eps : {1e-3, 1e-6, 1e-9}) {
    const double norm = nf::prox::sparse_group_prox(v, {edge - eps, base.mu, base.rho}).norm();
    EXPECT_NEAR(norm, eps, 1e-12);
  }
  EXPECT_EQ(nf::prox::sparse_group_prox(v, {edge, 0.0, 1.0}).norm(), 0.0);
}

TEST(NonnegProject, Examples) {
  Eigen::MatrixXd a(2, 2);
  a << -1.0, 2.0, 0.0, -3.0;
  Eigen::MatrixXd want(2, 2);
  want << 0.0, 2.0, 0.0, 0.0;
  EXPECT_EQ(nf::prox::nonneg_project(a), want);
  EXPECT_EQ(nf::prox::nonneg_project(want), want);
  EXPECT_EQ(nf::prox::nonneg_project(-Eigen::MatrixXd::Ones(3, 2)), Eigen::MatrixXd::Zero(3, 2));
}

TEST(NonnegProject, IdempotentAndNonExpansive) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd a = nf::testing::gaussian(rng, 4, 6);
    const Eigen::MatrixXd b = nf::testing::gaussian(rng, 4, 6);
    const Eigen::MatrixXd pa = nf::prox::nonneg_project(a);
    EXPECT_EQ(nf::prox::nonneg_project(pa), pa);
    EXPECT_LE((pa - nf::prox::nonneg_project(b)).norm(), (a - b).norm() + 1e-15);
  }
}
