#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <numbers>
#include <vector>

#include "varcause/error.hpp"
#include "varcause/model.hpp"
#include "varcause/spectral.hpp"

namespace varcause {

inline constexpr double kWhitenessThreshold = 0.01;

/// Retained channels S in the order (pair.target, pair.source), and the
/// marginalized channels R in increasing order.
struct Partition {
  std::array<Eigen::Index, 2> retained{};
  std::vector<Eigen::Index> marginalized;
};

inline Partition partition_of(const ChannelPair& pair, std::size_t dim) {
  validate_pair(pair, dim);
  Partition part;
  part.retained = {static_cast<Eigen::Index>(pair.target), static_cast<Eigen::Index>(pair.source)};
  for (std::size_t c = 0; c < dim; ++c) {
    if (c != pair.target && c != pair.source) part.marginalized.push_back(static_cast<Eigen::Index>(c));
  }
  return part;
}

template <typename Matrix>
Matrix select_block(const Matrix& m, const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(rows[r], cols[c]);
  return out;
}

/// S/R blocks of a d x d frequency matrix.
struct BlockPartition {
  Partition partition;
  FrequencyMatrix ss;
  FrequencyMatrix sr;
  FrequencyMatrix rs;
  FrequencyMatrix rr;
};

inline BlockPartition partition_blocks(const FrequencyMatrix& charpoly, const ChannelPair& pair) {
  const auto dim = static_cast<std::size_t>(charpoly.rows());
  if (dim < 3) {
    throw Error(ErrorCode::DimensionTooSmall, "reduction needs at least one marginalized channel (dim >= 3)");
  }
  Partition part = partition_of(pair, dim);
  const std::vector<Eigen::Index> s(part.retained.begin(), part.retained.end());
  const auto& r = part.marginalized;
  auto pick = [&](const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols) {
    return charpoly.map([&](const Eigen::MatrixXcd& m, double) { return select_block(m, rows, cols); });
  };
  return BlockPartition{part, pick(s, s), pick(s, r), pick(r, s), pick(r, r)};
}

/// G(lambda) = A_SS - A_SR A_RR^{-1} A_RS, the partitioned "bivariate"
/// polynomial obtained by eliminating R in the frequency domain.
inline FrequencyMatrix reduced_polynomial(const VarModel& model, const ChannelPair& pair, const FrequencyGrid& grid) {
  const auto blocks = partition_blocks(char_polynomial(model, grid), pair);
  std::vector<Eigen::MatrixXcd> values;
  values.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const Eigen::MatrixXcd rr_inv = invert_at(blocks.rr[g], grid[g], "marginalized block A_RR(lambda)");
    values.push_back(blocks.ss[g] - blocks.sr[g] * rr_inv * blocks.rs[g]);
  }
  return FrequencyMatrix(blocks.ss.shared_grid(), std::move(values));
}

/// Spectral matrix f of the reduction's error process e' = E_S - B E_R with
/// B = A_SR A_RR^{-1}:
///   2 pi f = S_SS - B S_RS - S_SR B^* + B S_RR B^*.
/// Returns f itself (the right-hand side divided by 2 pi).
inline FrequencyMatrix error_spectral_matrix(const VarModel& model, const ChannelPair& pair,
                                             const FrequencyGrid& grid) {
  const auto blocks = partition_blocks(char_polynomial(model, grid), pair);
  const std::vector<Eigen::Index> s(blocks.partition.retained.begin(), blocks.partition.retained.end());
  const auto& r = blocks.partition.marginalized;
  const Eigen::MatrixXcd sigma = model.sigma().cast<Complex>();
  const Eigen::MatrixXcd s_ss = select_block(sigma, s, s);
  const Eigen::MatrixXcd s_sr = select_block(sigma, s, r);
  const Eigen::MatrixXcd s_rs = select_block(sigma, r, s);
  const Eigen::MatrixXcd s_rr = select_block(sigma, r, r);

  std::vector<Eigen::MatrixXcd> values;
  values.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const Eigen::MatrixXcd b = blocks.sr[g] * invert_at(blocks.rr[g], grid[g], "marginalized block A_RR(lambda)");
    const Eigen::MatrixXcd b_adj = b.adjoint();
    Eigen::MatrixXcd m = s_ss - b * s_rs - s_sr * b_adj + b * s_rr * b_adj;
    m = 0.5 * (m + m.adjoint()).eval();
    values.push_back(m / (2.0 * std::numbers::pi));
  }
  return FrequencyMatrix(blocks.ss.shared_grid(), std::move(values));
}

/// Grid average of 2 pi f(lambda).
inline Eigen::MatrixXcd mean_scaled_spectrum(const FrequencyMatrix& spectrum) {
  Eigen::MatrixXcd mean = Eigen::MatrixXcd::Zero(spectrum.rows(), spectrum.cols());
  for (const auto& v : spectrum.values()) mean += v;
  return mean * (2.0 * std::numbers::pi / static_cast<double>(spectrum.size()));
}

/// max over the grid of ||2 pi f(lambda) - M||_F, with M the grid average of
/// 2 pi f. Zero iff the spectrum is constant, i.e. the process is white.
/// The full complex matrix enters, so a constant-modulus off-diagonal with
/// rotating phase still counts as non-white.
inline double whiteness_deficit(const FrequencyMatrix& spectrum) {
  const Eigen::MatrixXcd mean = mean_scaled_spectrum(spectrum);
  double worst = 0.0;
  for (const auto& v : spectrum.values()) {
    worst = std::max(worst, (2.0 * std::numbers::pi * v - mean).norm());
  }
  return worst;
}

/// Boolean verdict: not white when deficit / ||M||_F exceeds 1%.
inline bool is_white(const FrequencyMatrix& spectrum, double threshold = kWhitenessThreshold) {
  const double deficit = whiteness_deficit(spectrum);
  const double scale = mean_scaled_spectrum(spectrum).norm();
  if (scale == 0.0) return deficit == 0.0;
  return deficit / scale <= threshold;
}

/// Finite moving-average form x(t) = sum_k theta[k] . eps(t - k), each theta[k]
/// a weight row over the innovation channels (lag k maps to the key).
using MovingAverage = std::map<int, Eigen::RowVectorXd>;

/// E[a(t - lag) b(t)] for two finite moving averages of the same white noise
/// with covariance `sigma`.
inline double ma_lagged_crosscov(const MovingAverage& a, const MovingAverage& b, const Eigen::MatrixXd& sigma,
                                 int lag) {
  double total = 0.0;
  for (const auto& [k, wa] : a) {
    // a(t - lag) touches eps(t - lag - k); b(t) touches it at its own lag lag + k.
    if (auto it = b.find(k + lag); it != b.end()) total += wa * sigma * it->second.transpose();
  }
  return total;
}

/// E(e'_1(t-1) e'_2(t)) for the counterexample's error process as written in
/// the time domain: e'_1(t) = e1(t) + alpha e3(t-1), e'_2(t) = e2(t) + beta e3(t-2).
/// Nonzero (= alpha beta) whenever both paths exist, so e' is not white.
inline double kaminski_error_lag_crosscov(double alpha, double beta) {
  const auto unit = [](Eigen::Index c, double w) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(3);
    row(c) = w;
    return row;
  };
  const MovingAverage e1{{0, unit(0, 1.0)}, {1, unit(2, alpha)}};
  const MovingAverage e2{{0, unit(1, 1.0)}, {2, unit(2, beta)}};
  return ma_lagged_crosscov(e1, e2, Eigen::MatrixXd::Identity(3, 3), 1);
}

/// Partitioned bivariate representation of a channel pair together with
/// the spectrum of its error process.
struct ReducedRepresentation {
  ChannelPair pair;
  FrequencyMatrix reduced_poly;
  FrequencyMatrix error_spectrum;
  double deficit = 0.0;
  bool white = true;
};

inline ReducedRepresentation reduce(const VarModel& model, const ChannelPair& pair, const FrequencyGrid& grid) {
  auto poly = reduced_polynomial(model, pair, grid);
  auto spectrum = error_spectral_matrix(model, pair, grid);
  const double deficit = whiteness_deficit(spectrum);
  const bool white = is_white(spectrum);
  return ReducedRepresentation{pair, std::move(poly), std::move(spectrum), deficit, white};
}

}  // namespace varcause
