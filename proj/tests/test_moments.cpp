#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "varcause/moments.hpp"

using namespace varcause;

TEST(Autocov, WhiteNoise) {
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1.0, 0.3, 0.3, 2.0;
  const auto seq = autocov(make_var({}, sigma), 5);
  EXPECT_EQ(seq.gammas[0], sigma);
  for (std::size_t h = 1; h <= 5; ++h) EXPECT_TRUE(seq.gammas[h].isZero(0.0));
}

TEST(Autocov, DefaultMaxLag) {
  EXPECT_EQ(default_maxlag(counterexample_model(1, 1)), 50u);
  std::vector<Eigen::MatrixXd> coeffs(30, Eigen::MatrixXd::Zero(1, 1));
  coeffs[0](0, 0) = 0.5;
  EXPECT_EQ(default_maxlag(make_var(coeffs, Eigen::MatrixXd::Identity(1, 1))), 60u);
}

TEST(Autocov, ScalarAr1ClosedForm) {
  const auto seq = autocov(make_var({Eigen::MatrixXd::Constant(1, 1, 0.5)}, Eigen::MatrixXd::Identity(1, 1)), 3);
  EXPECT_NEAR(seq.gammas[0](0, 0), 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(seq.gammas[1](0, 0), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(seq.gammas[3](0, 0), 1.0 / 6.0, 1e-14);
}

TEST(Autocov, CounterexampleHandExpansion) {
  // X1 = e1 + a e3(t-2), X2 = e2 + b e3(t-1), X3 = e3.
  for (double alpha : {1.0, -0.5, 2.0}) {
    for (double beta : {1.0, 0.5}) {
      const auto seq = autocov(counterexample_model(alpha, beta), 4);
      Eigen::Matrix3d g0 = Eigen::Matrix3d::Identity();
      g0(0, 0) = 1 + alpha * alpha;
      g0(1, 1) = 1 + beta * beta;
      EXPECT_LT((seq.gammas[0] - g0).norm(), 1e-13);
      Eigen::Matrix3d g1 = Eigen::Matrix3d::Zero();
      g1(0, 1) = alpha * beta;  // E[X1(t) X2(t-1)]
      g1(1, 2) = beta;          // E[X2(t) X3(t-1)]
      EXPECT_LT((seq.gammas[1] - g1).norm(), 1e-13);
      Eigen::Matrix3d g2 = Eigen::Matrix3d::Zero();
      g2(0, 2) = alpha;  // E[X1(t) X3(t-2)]
      EXPECT_LT((seq.gammas[2] - g2).norm(), 1e-13);
      EXPECT_LT(seq.gammas[3].norm(), 1e-13);
      EXPECT_LT(seq.gammas[4].norm(), 1e-13);
    }
  }
}

TEST(Autocov, MatchesMovingAverageOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    // 3x3: direct Kronecker solve; 5x4 = 20 > 16: doubling iteration.
    const bool large = seed % 2 == 1;
    const auto model = large ? random_stable_var(5, 4, 0.8, seed) : random_stable_var(3, 2, 0.9, seed);
    const auto seq = autocov(model, 12);
    const auto expected = oracle::ma_autocov(model, 12, 1500);
    for (std::size_t h = 0; h <= 12; ++h) {
      EXPECT_LT((seq.gammas[h] - expected[h]).norm(), 1e-10 * expected[0].norm()) << "seed " << seed << " lag " << h;
    }
  }
}

TEST(Autocov, DirectAndDoublingLyapunovAgree) {
  const auto model = random_stable_var(3, 3, 0.85, 42);
  const auto c = companion_matrix(model);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(c.rows(), c.cols());
  q.topLeftCorner(3, 3) = model.sigma();
  const auto direct = solve_discrete_lyapunov(c, q);
  // Doubling by hand.
  Eigen::MatrixXd p = q, power = c;
  for (int i = 0; i < 60; ++i) {
    p += power * p * power.transpose();
    power = (power * power).eval();
  }
  EXPECT_LT((direct - p).norm(), 1e-10 * p.norm());
}

TEST(Autocov, BlockToeplitzIsPsd) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const auto seq = autocov(random_stable_var(3, 2, 0.95, seed), 20);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block_toeplitz(seq, 21), Eigen::EigenvaluesOnly);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-8);
  }
}

TEST(Autocov, GeometricDecay) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto model = random_stable_var(3, 2, 0.7, seed);
    const auto seq = autocov(model, 80);
    // Allow a polynomial prefactor from possible Jordan blocks: rho^h h^2.
    const double c = seq.gammas[0].norm();
    for (std::size_t h = 1; h <= 80; ++h) {
      const double bound = 50.0 * c * std::pow(model.spectral_radius(), static_cast<double>(h)) * (1.0 + h * h);
      EXPECT_LE(seq.gammas[h].norm(), bound) << "lag " << h;
    }
    EXPECT_LT(seq.gammas[80].norm(), 1e-9 * c);
  }
}

TEST(SubprocessAutocov, CounterexamplePair) {
  const auto sub = subprocess_autocov(autocov(counterexample_model(1.0, 1.0), 5), {0, 1});
  EXPECT_LT((sub.gammas[0] - Eigen::Matrix2d(Eigen::Vector2d(2, 2).asDiagonal())).norm(), 1e-13);
  Eigen::Matrix2d g1;
  g1 << 0, 1, 0, 0;
  EXPECT_LT((sub.gammas[1] - g1).norm(), 1e-13);
  EXPECT_LT(sub.gammas[2].norm(), 1e-13);
}

TEST(SubprocessAutocov, IdentitySelectionAndOrdering) {
  const auto model = random_stable_var(2, 2, 0.5, 3);
  const auto seq = autocov(model, 6);
  const auto same = subprocess_autocov(seq, {0, 1});
  const auto swapped = subprocess_autocov(seq, {1, 0});
  Eigen::Matrix2d perm;
  perm << 0, 1, 1, 0;
  for (std::size_t h = 0; h <= 6; ++h) {
    EXPECT_EQ(same.gammas[h], seq.gammas[h]);
    EXPECT_EQ(swapped.gammas[h], perm * seq.gammas[h] * perm);
  }
}

TEST(SubprocessAutocov, IndependentChannelsAreDiagonal) {
  std::vector<Eigen::MatrixXd> coeffs{Eigen::Vector3d(0.5, -0.3, 0.8).asDiagonal()};
  const auto sub = subprocess_autocov(autocov(make_var(coeffs, Eigen::MatrixXd::Identity(3, 3)), 10), {2, 0});
  for (const auto& g : sub.gammas) {
    EXPECT_EQ(g(0, 1), 0.0);
    EXPECT_EQ(g(1, 0), 0.0);
  }
  EXPECT_NEAR(sub.gammas[1](0, 0), 0.8 / (1 - 0.64), 1e-12);
}
