#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "varcause/reduction.hpp"

using namespace varcause;

namespace {

const double kPi = std::numbers::pi;
const ChannelPair kPair12{0, 1};

// Model with A_SR = 0 at every lag for S = {0, 1}: channels 2.. never feed 0, 1.
VarModel causally_closed(std::uint64_t seed, std::size_t dim, bool isolate_both_ways) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    const auto base = random_stable_var(dim, 2, 0.7, seed * 1000 + attempt);
    std::vector<Eigen::MatrixXd> coeffs = base.coeffs();
    for (auto& a : coeffs) {
      a.block(0, 2, 2, static_cast<Eigen::Index>(dim) - 2).setZero();
      if (isolate_both_ways) a.block(2, 0, static_cast<Eigen::Index>(dim) - 2, 2).setZero();
    }
    try {
      return make_var(coeffs, base.sigma());
    } catch (const Error&) {
    }
  }
}

// (1/2pi) sum_h E[e1(t+h) e2(t)] e^{-i h lambda} for e1 = eps1 + alpha eps3(t-2),
// e2 = eps2 + beta eps3(t-1), the reduction error of the counterexample
// written out in the time domain (E[e1(t+1) e2(t)] = alpha beta only).
Complex reduction_error_cross_spectrum(double alpha, double beta, double lambda) {
  return alpha * beta * std::polar(1.0, -lambda) / (2 * kPi);
}

}  // namespace

TEST(PartitionBlocks, CounterexampleBlocks) {
  const double alpha = 1.5, beta = 0.5;
  const auto grid = FrequencyGrid::uniform(17);
  const auto blocks = partition_blocks(char_polynomial(counterexample_model(alpha, beta), grid), kPair12);
  ASSERT_EQ(blocks.partition.marginalized, std::vector<Eigen::Index>{2});
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EXPECT_TRUE(blocks.ss[g].isIdentity(0.0));
    EXPECT_LT(std::abs(blocks.sr[g](0, 0) + alpha * std::polar(1.0, -2 * grid[g])), 1e-15);
    EXPECT_LT(std::abs(blocks.sr[g](1, 0) + beta * std::polar(1.0, -grid[g])), 1e-15);
    EXPECT_TRUE(blocks.rs[g].isZero(0.0));
    EXPECT_EQ(blocks.rr[g](0, 0), Complex(1.0, 0.0));
  }
}

TEST(PartitionBlocks, WhiteNoiseAndSmallDimension) {
  const auto grid = FrequencyGrid::uniform(5);
  const auto blocks = partition_blocks(char_polynomial(make_var({}, Eigen::MatrixXd::Identity(3, 3)), grid), {2, 0});
  EXPECT_EQ(blocks.partition.retained[0], 2);
  EXPECT_EQ(blocks.partition.retained[1], 0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EXPECT_TRUE(blocks.ss[g].isIdentity(0.0));
    EXPECT_TRUE(blocks.sr[g].isZero(0.0));
    EXPECT_TRUE(blocks.rs[g].isZero(0.0));
  }
  try {
    partition_blocks(char_polynomial(make_var({}, Eigen::MatrixXd::Identity(2, 2)), grid), kPair12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionTooSmall);
  }
}

TEST(ReducedPolynomial, CounterexampleAndWhiteNoiseAreIdentity) {
  const auto grid = FrequencyGrid::uniform(33);
  const auto counter = reduced_polynomial(counterexample_model(1.0, 2.0), kPair12, grid);
  for (const auto& g : counter.values()) EXPECT_LT((g - Eigen::MatrixXcd::Identity(2, 2)).norm(), 1e-15);
  const auto white = reduced_polynomial(make_var({}, Eigen::MatrixXd::Identity(4, 4)), {1, 3}, grid);
  for (const auto& g : white.values()) EXPECT_TRUE(g.isIdentity(0.0));
}

TEST(ReducedPolynomial, IsolatedPairKeepsOwnBlock) {
  const auto grid = FrequencyGrid::uniform(33);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto model = causally_closed(seed, 4, true);
    const auto g = reduced_polynomial(model, kPair12, grid);
    const auto a = char_polynomial(model, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_LT((g[k] - a[k].topLeftCorner(2, 2)).norm(), 1e-14);
  }
}

TEST(ErrorSpectralMatrix, WhiteNoiseIsSigmaBlock) {
  Eigen::MatrixXd sigma(3, 3);
  sigma << 2, 0.5, 0.1, 0.5, 1, 0.2, 0.1, 0.2, 3;
  const auto f = error_spectral_matrix(make_var({}, sigma), {2, 0}, FrequencyGrid::uniform(9));
  Eigen::MatrixXd expected(2, 2);
  expected << 3, 0.1, 0.1, 2;
  for (const auto& v : f.values()) EXPECT_LT((v - expected.cast<Complex>() / (2 * kPi)).norm(), 1e-15);
}

TEST(ErrorSpectralMatrix, CounterexampleMatchesTimeDomainForm) {
  const auto grid = FrequencyGrid::uniform(257);
  for (double alpha : {1.0, 0.5, -2.0}) {
    for (double beta : {1.0, 2.0}) {
      const auto f = error_spectral_matrix(counterexample_model(alpha, beta), kPair12, grid);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        EXPECT_NEAR(2 * kPi * f[g](0, 0).real(), 1 + alpha * alpha, 1e-13);
        EXPECT_NEAR(2 * kPi * f[g](1, 1).real(), 1 + beta * beta, 1e-13);
        EXPECT_LT(std::abs(f[g](0, 1) - reduction_error_cross_spectrum(alpha, beta, grid[g])), 1e-15);
        EXPECT_EQ(f[g](1, 0), std::conj(f[g](0, 1)));
      }
    }
  }
}

TEST(ErrorSpectralMatrix, CounterexampleOffDiagonalHasUnitModulusRotatingPhase) {
  const auto grid = FrequencyGrid::uniform(257);
  const auto f = error_spectral_matrix(counterexample_model(1.0, 1.0), kPair12, grid);
  for (std::size_t g = 0; g < grid.size(); ++g) EXPECT_NEAR(std::abs(2 * kPi * f[g](0, 1)), 1.0, 1e-14);
  EXPECT_NEAR(std::arg(f[0](0, 1)), 0.0, 1e-14);
  EXPECT_NEAR(std::arg(f[128](0, 1)), -kPi / 2, 1e-14);
}

TEST(ErrorSpectralMatrix, CausallyClosedPairIsWhiteWithSigmaBlock) {
  const auto grid = FrequencyGrid::uniform(257);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto model = causally_closed(seed, 3 + seed % 3, false);
    const auto f = error_spectral_matrix(model, kPair12, grid);
    const Eigen::MatrixXcd expected = model.sigma().topLeftCorner(2, 2).cast<Complex>() / (2 * kPi);
    for (const auto& v : f.values()) EXPECT_LT((v - expected).norm(), 1e-14);
    EXPECT_LT(whiteness_deficit(f), 1e-10);
    EXPECT_TRUE(is_white(f));
  }
}

TEST(ErrorSpectralMatrix, IntegralReproducesLagZeroCovariance) {
  // int_{-pi}^{pi} f = 2 int_0^pi Re f for the even extension; trapezoid rule.
  const auto grid = FrequencyGrid::uniform(257);
  const double h = kPi / 256;
  for (double alpha : {0.5, 1.0, 2.0}) {
    for (double beta : {-1.0, 0.5, 2.0}) {
      const auto f = error_spectral_matrix(counterexample_model(alpha, beta), kPair12, grid);
      Eigen::MatrixXd integral = Eigen::MatrixXd::Zero(2, 2);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const double w = (g == 0 || g + 1 == grid.size()) ? 0.5 * h : h;
        integral += 2 * w * f[g].real();
      }
      EXPECT_NEAR(integral(0, 0), 1 + alpha * alpha, 1e-6);
      EXPECT_NEAR(integral(1, 1), 1 + beta * beta, 1e-6);
      EXPECT_NEAR(integral(0, 1), 0.0, 1e-6);
    }
  }
}

TEST(WhitenessDeficit, WhiteNoise) {
  const auto f = error_spectral_matrix(make_var({}, Eigen::MatrixXd::Identity(3, 3)), kPair12, FrequencyGrid::uniform());
  EXPECT_LT(whiteness_deficit(f), 1e-12);
  EXPECT_TRUE(is_white(f));
}

TEST(WhitenessDeficit, CounterexampleMatchesDirectEvaluation) {
  const auto grid = FrequencyGrid::uniform(257);
  const auto f = error_spectral_matrix(counterexample_model(1.0, 1.0), kPair12, grid);
  // Direct: only the off-diagonal e^{-i lambda} varies.
  Complex mean = 0;
  for (double x : grid.points()) mean += std::polar(1.0, -x);
  mean /= static_cast<double>(grid.size());
  double expected = 0;
  for (double x : grid.points()) expected = std::max(expected, std::sqrt(2.0) * std::abs(std::polar(1.0, -x) - mean));
  EXPECT_NEAR(whiteness_deficit(f), expected, 1e-13);
  EXPECT_GE(whiteness_deficit(f), std::sqrt(2.0));
  EXPECT_FALSE(is_white(f));
}

TEST(WhitenessDeficit, StableUnderGridRefinement) {
  for (double alpha : {0.5, 1.0, 2.0}) {
    const auto model = counterexample_model(alpha, 1.0);
    const double coarse = whiteness_deficit(error_spectral_matrix(model, kPair12, FrequencyGrid::uniform(257)));
    const double fine = whiteness_deficit(error_spectral_matrix(model, kPair12, FrequencyGrid::uniform(1025)));
    EXPECT_LT(std::abs(coarse - fine), 0.01 * fine);
  }
}

TEST(KaminskiError, LagCrossCovariance) {
  EXPECT_EQ(kaminski_error_lag_crosscov(1.0, 1.0), 1.0);
  EXPECT_EQ(kaminski_error_lag_crosscov(0.0, 5.0), 0.0);
  EXPECT_EQ(kaminski_error_lag_crosscov(2.0, -3.0), -6.0);
}

TEST(MovingAverageCrossCov, GeneralLags) {
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1.0, 0.5, 0.5, 2.0;
  const MovingAverage a{{0, Eigen::RowVector2d(1.0, 0.0)}, {3, Eigen::RowVector2d(0.0, 2.0)}};
  const MovingAverage b{{1, Eigen::RowVector2d(1.0, 1.0)}};
  // a(t-1) b(t) overlap: a lag 0 hits eps(t-1) = b lag 1 -> [1,0] S [1,1]' = 1.5.
  EXPECT_DOUBLE_EQ(ma_lagged_crosscov(a, b, sigma, 1), 1.5);
  // a(t+2) b(t): a lag 3 hits eps(t-1) -> [0,2] S [1,1]' = 5.
  EXPECT_DOUBLE_EQ(ma_lagged_crosscov(a, b, sigma, -2), 5.0);
  EXPECT_DOUBLE_EQ(ma_lagged_crosscov(a, b, sigma, 0), 0.0);
}

TEST(Reduce, BundlesVerdict) {
  const auto red = reduce(counterexample_model(1.0, 1.0), kPair12, FrequencyGrid::uniform());
  EXPECT_FALSE(red.white);
  EXPECT_GT(red.deficit, 1.0);
  EXPECT_EQ(red.reduced_poly.size(), 257u);
}
