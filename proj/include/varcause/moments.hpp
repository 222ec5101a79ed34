#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "varcause/error.hpp"
#include "varcause/model.hpp"

namespace varcause {

/// Largest companion dimension solved through the Kronecker system; above it
/// the doubling iteration is used.
inline constexpr Eigen::Index kDirectLyapunovMaxDim = 16;
inline constexpr double kLyapunovResidualTol = 1e-10;

/// Gamma(0..H) with Gamma(h) = E[X(t) X(t-h)']. Negative lags are implied by
/// Gamma(-h) = Gamma(h)'.
struct AutocovSequence {
  std::vector<Eigen::MatrixXd> gammas;

  std::size_t dim() const noexcept { return gammas.empty() ? 0 : static_cast<std::size_t>(gammas.front().rows()); }
  std::size_t maxlag() const noexcept { return gammas.size() - 1; }

  Eigen::MatrixXd at(long lag) const {
    if (lag < 0) return gammas.at(static_cast<std::size_t>(-lag)).transpose();
    return gammas.at(static_cast<std::size_t>(lag));
  }
};

inline std::size_t default_maxlag(const VarModel& model) { return std::max<std::size_t>(2 * model.order(), 50); }

/// Solves P = C P C' + Q for stable C.
inline Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& c, const Eigen::MatrixXd& q) {
  const Eigen::Index n = c.rows();
  Eigen::MatrixXd p;
  if (n <= kDirectLyapunovMaxDim) {
    // (I - C kron C) vec(P) = vec(Q), column-major vec.
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) system.block(i * n, j * n, n, n) -= c(i, j) * c;
    const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(q.data(), n * n);
    const Eigen::VectorXd vec_p = system.partialPivLu().solve(rhs);
    p = Eigen::Map<const Eigen::MatrixXd>(vec_p.data(), n, n);
  } else {
    Eigen::MatrixXd power = c;
    p = q;
    bool done = false;
    for (int iter = 0; iter < 200 && !done; ++iter) {
      p += power * p * power.transpose();
      power = (power * power).eval();
      done = power.norm() < 1e-18;
    }
    if (!done) throw Error(ErrorCode::NoConvergence, "Lyapunov doubling did not converge");
  }
  p = 0.5 * (p + p.transpose()).eval();
  const double residual = (p - c * p * c.transpose() - q).norm();
  if (!(residual < kLyapunovResidualTol * std::max(1.0, p.norm()))) {
    throw Error(ErrorCode::NoConvergence, "Lyapunov residual " + std::to_string(residual) + " too large");
  }
  return p;
}

/// Exact autocovariances of a stable VAR up to `maxlag`. The first `order`
/// lags come from the companion state covariance; the rest from the
/// Yule-Walker recursion Gamma(h) = sum_u A(u) Gamma(h-u).
inline AutocovSequence autocov(const VarModel& model, std::size_t maxlag) {
  const auto d = static_cast<Eigen::Index>(model.dim());
  const std::size_t p = model.order();
  AutocovSequence seq;
  seq.gammas.assign(maxlag + 1, Eigen::MatrixXd::Zero(d, d));
  if (p == 0) {
    seq.gammas[0] = model.sigma();
    return seq;
  }
  const Eigen::MatrixXd c = companion_matrix(model);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(c.rows(), c.cols());
  q.topLeftCorner(d, d) = model.sigma();
  const Eigen::MatrixXd state = solve_discrete_lyapunov(c, q);
  // State is (X(t), ..., X(t-p+1)); its (0, h) block is Gamma(h).
  for (std::size_t h = 0; h < std::min(p, maxlag + 1); ++h) {
    seq.gammas[h] = state.block(0, static_cast<Eigen::Index>(h) * d, d, d);
  }
  for (std::size_t h = p; h <= maxlag; ++h) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t u = 1; u <= p; ++u) g += model.coeff(u) * seq.at(static_cast<long>(h) - static_cast<long>(u));
    seq.gammas[h] = g;
  }
  return seq;
}

inline AutocovSequence autocov(const VarModel& model) { return autocov(model, default_maxlag(model)); }

/// Autocovariances of the retained pair S = (pair.target, pair.source).
inline AutocovSequence subprocess_autocov(const AutocovSequence& seq, const ChannelPair& pair) {
  validate_pair(pair, seq.dim());
  const auto t = static_cast<Eigen::Index>(pair.target);
  const auto s = static_cast<Eigen::Index>(pair.source);
  AutocovSequence out;
  out.gammas.reserve(seq.gammas.size());
  for (const auto& g : seq.gammas) {
    Eigen::Matrix2d sub;
    sub << g(t, t), g(t, s), g(s, t), g(s, s);
    out.gammas.emplace_back(sub);
  }
  return out;
}

/// Covariance of the stacked vector (X(t), X(t-1), ..., X(t-blocks+1)):
/// block (i, j) is Gamma(j - i).
inline Eigen::MatrixXd block_toeplitz(const AutocovSequence& seq, std::size_t blocks) {
  const auto d = static_cast<Eigen::Index>(seq.dim());
  const auto n = static_cast<Eigen::Index>(blocks);
  Eigen::MatrixXd t(n * d, n * d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) t.block(i * d, j * d, d, d) = seq.at(static_cast<long>(j - i));
  return t;
}

}  // namespace varcause
