#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "varcause/error.hpp"
#include "varcause/model.hpp"
#include "varcause/moments.hpp"
#include "varcause/rng.hpp"
#include "varcause/spectral.hpp"

namespace varcause {

inline constexpr std::size_t kDefaultBurnIn = 1000;

/// T x d sample path. Row t is X(t).
struct Trajectory {
  Eigen::MatrixXd samples;
  std::uint64_t seed = 0;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(samples.cols()); }
  std::size_t length() const noexcept { return static_cast<std::size_t>(samples.rows()); }

  /// Columns `channels` (0-based) in the given order.
  Trajectory select(const std::vector<std::size_t>& channels) const {
    Trajectory out{Eigen::MatrixXd(samples.rows(), static_cast<Eigen::Index>(channels.size())), seed};
    for (std::size_t c = 0; c < channels.size(); ++c) {
      if (channels[c] >= dim()) throw Error(ErrorCode::InvalidPair, "channel out of range");
      out.samples.col(static_cast<Eigen::Index>(c)) = samples.col(static_cast<Eigen::Index>(channels[c]));
    }
    return out;
  }
};

/// Symmetric square root factor L with L L' = sigma, valid for singular PSD sigma.
inline Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

/// Gaussian simulation from zero initial state. The first `burn_in` steps are
/// discarded; the result is a pure function of (model, length, seed, burn_in).
inline Trajectory simulate(const VarModel& model, std::size_t length, std::uint64_t seed,
                           std::size_t burn_in = kDefaultBurnIn) {
  const std::size_t p = model.order();
  if (burn_in < 10 * p) throw Error(ErrorCode::UsageError, "burn_in must be at least 10 * order");
  const auto d = static_cast<Eigen::Index>(model.dim());
  const Eigen::MatrixXd factor = psd_factor(model.sigma());
  PhiloxNormal normal(seed);

  // Ring buffer of the last p states.
  const std::size_t window = std::max<std::size_t>(p, 1);
  std::vector<Eigen::VectorXd> history(window, Eigen::VectorXd::Zero(d));
  std::size_t head = 0;  // history[head] is X(t-1)
  Eigen::VectorXd z(d), x(d);

  Trajectory traj{Eigen::MatrixXd(static_cast<Eigen::Index>(length), d), seed};
  const std::size_t total = burn_in + length;
  for (std::size_t t = 0; t < total; ++t) {
    for (Eigen::Index c = 0; c < d; ++c) z(c) = normal();
    x.noalias() = factor * z;
    for (std::size_t u = 1; u <= p; ++u) x.noalias() += model.coeff(u) * history[(head + u - 1) % window];
    head = (head + window - 1) % window;
    history[head] = x;
    if (t >= burn_in) traj.samples.row(static_cast<Eigen::Index>(t - burn_in)) = x.transpose();
  }
  return traj;
}

/// Gamma_hat(h) = (1/T) sum_t X(t) X(t-h)', no demeaning (processes are zero mean).
inline AutocovSequence sample_autocov(const Eigen::MatrixXd& samples, std::size_t maxlag) {
  const Eigen::Index n = samples.rows();
  AutocovSequence seq;
  for (std::size_t h = 0; h <= maxlag; ++h) {
    const auto lag = static_cast<Eigen::Index>(h);
    if (lag >= n) {
      seq.gammas.push_back(Eigen::MatrixXd::Zero(samples.cols(), samples.cols()));
      continue;
    }
    seq.gammas.push_back(samples.bottomRows(n - lag).transpose() * samples.topRows(n - lag) /
                         static_cast<double>(n));
  }
  return seq;
}

inline AutocovSequence sample_autocov(const Trajectory& traj, std::size_t maxlag) {
  return sample_autocov(traj.samples, maxlag);
}

struct WhitenessReport {
  std::vector<Eigen::MatrixXd> crosscov;      ///< C(l) = (1/N) sum r(t) r(t-l)', l = 0..L
  std::vector<Eigen::MatrixXd> correlations;  ///< D^{-1/2} C(l) D^{-1/2}, l = 1..L
  std::vector<double> lag_norms;              ///< max |entry| of correlations[l-1]
  double portmanteau = 0.0;                   ///< N sum_l tr(C(l)' C(0)^{-1} C(l) C(0)^{-1})
  std::size_t dof = 0;
  double bound = 0.0;                         ///< 4 / sqrt(N)
  bool white = true;                          ///< every lag norm below bound
};

/// Lagged cross-correlations and the multivariate portmanteau statistic of a
/// residual (or any zero-mean) series. `fitted_params` is subtracted from the
/// d^2 L degrees of freedom.
inline WhitenessReport residual_whiteness(const Eigen::MatrixXd& residuals, std::size_t maxlag,
                                          std::size_t fitted_params = 0) {
  const double n = static_cast<double>(residuals.rows());
  const auto d = static_cast<std::size_t>(residuals.cols());
  WhitenessReport rep;
  rep.crosscov = sample_autocov(residuals, maxlag).gammas;
  const Eigen::MatrixXd& c0 = rep.crosscov.front();
  const Eigen::VectorXd inv_sd = c0.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd c0_inv = c0.inverse();
  rep.bound = 4.0 / std::sqrt(n);
  for (std::size_t l = 1; l <= maxlag; ++l) {
    const Eigen::MatrixXd& c = rep.crosscov[l];
    Eigen::MatrixXd corr = inv_sd.asDiagonal() * c * inv_sd.asDiagonal();
    const double norm = corr.cwiseAbs().maxCoeff();
    rep.lag_norms.push_back(norm);
    rep.white = rep.white && norm < rep.bound;
    rep.correlations.push_back(std::move(corr));
    rep.portmanteau += n * (c.transpose() * c0_inv * c * c0_inv).trace();
  }
  const std::size_t total = d * d * maxlag;
  rep.dof = total > fitted_params ? total - fitted_params : 0;
  return rep;
}

struct FitResult {
  VarModel model;
  std::vector<Eigen::MatrixXd> std_errors;  ///< same layout as model.coeffs()
  Eigen::MatrixXd residuals;                ///< (T - p) x d
  WhitenessReport whiteness;
};

inline constexpr std::size_t kDefaultResidualLags = 10;

/// Equation-by-equation least squares fit of a zero-mean VAR(order).
/// Standard errors: s_j^2 (Z'Z)^{-1}_mm with s_j^2 the residual variance of
/// equation j on N - d p degrees of freedom. Sigma is the residual sample
/// covariance (divisor N).
inline FitResult fit_var(const Trajectory& traj, std::size_t order, std::size_t residual_lags = kDefaultResidualLags) {
  const auto d = static_cast<Eigen::Index>(traj.dim());
  const auto p = static_cast<Eigen::Index>(order);
  const auto t_len = static_cast<Eigen::Index>(traj.length());
  const Eigen::Index n = t_len - p;
  const Eigen::Index k = d * p;
  if (order == 0) throw Error(ErrorCode::UsageError, "fit order must be at least 1");
  if (n <= k || t_len < d * (p + 1)) {
    throw Error(ErrorCode::RankDeficientRegressors, "trajectory too short for order " + std::to_string(order));
  }
  const Eigen::MatrixXd& x = traj.samples;

  auto regressors = [&](Eigen::Index t0, Eigen::Index rows) {
    Eigen::MatrixXd z(rows, k);
    for (Eigen::Index u = 1; u <= p; ++u) z.middleCols((u - 1) * d, d) = x.middleRows(t0 - u, rows);
    return z;
  };

  constexpr Eigen::Index kChunk = 8192;
  Eigen::MatrixXd zz = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd zy = Eigen::MatrixXd::Zero(k, d);
  for (Eigen::Index t0 = p; t0 < t_len; t0 += kChunk) {
    const Eigen::Index rows = std::min(kChunk, t_len - t0);
    const Eigen::MatrixXd z = regressors(t0, rows);
    zz.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
    zy.noalias() += z.transpose() * x.middleRows(t0, rows);
  }
  zz = zz.selfadjointView<Eigen::Lower>();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(zz, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 1e-12 * eig.eigenvalues().maxCoeff())) {
    throw Error(ErrorCode::RankDeficientRegressors, "regressor cross-product matrix is singular");
  }
  const Eigen::LLT<Eigen::MatrixXd> chol(zz);
  const Eigen::MatrixXd zz_inv = chol.solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd beta = chol.solve(zy);  // k x d

  Eigen::MatrixXd residuals(n, d);
  for (Eigen::Index t0 = p; t0 < t_len; t0 += kChunk) {
    const Eigen::Index rows = std::min(kChunk, t_len - t0);
    residuals.middleRows(t0 - p, rows) = x.middleRows(t0, rows) - regressors(t0, rows) * beta;
  }
  Eigen::MatrixXd sigma = residuals.transpose() * residuals / static_cast<double>(n);
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  const Eigen::VectorXd s2 = residuals.colwise().squaredNorm().transpose() / static_cast<double>(n - k);

  std::vector<Eigen::MatrixXd> coeffs(order, Eigen::MatrixXd(d, d)), se(order, Eigen::MatrixXd(d, d));
  for (Eigen::Index u = 0; u < p; ++u) {
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index c = 0; c < d; ++c) {
        const Eigen::Index m = u * d + c;
        coeffs[static_cast<std::size_t>(u)](j, c) = beta(m, j);
        se[static_cast<std::size_t>(u)](j, c) = std::sqrt(s2(j) * zz_inv(m, m));
      }
    }
  }
  auto whiteness = residual_whiteness(residuals, residual_lags, static_cast<std::size_t>(d * k));
  return FitResult{make_var(std::move(coeffs), std::move(sigma)), std::move(se), std::move(residuals),
                   std::move(whiteness)};
}

inline WhitenessReport residual_whiteness(const FitResult& fit, std::size_t maxlag) {
  const auto params = fit.model.dim() * fit.model.dim() * fit.model.order();
  return residual_whiteness(fit.residuals, maxlag, params);
}

/// Welch estimate of the spectral matrix on the uniform grid with `count`
/// points: Hann-tapered segments of length 2 (count - 1) with 50% overlap,
/// then a (2 * half_width + 1)-bin Daniell average across frequency.
/// Scaled so that its expectation approximates f(lambda) = H Sigma H^* / 2 pi.
inline FrequencyMatrix smoothed_periodogram(const Trajectory& traj, std::size_t count = kDefaultGridCount,
                                            std::size_t half_width = 2) {
  const std::size_t seg = 2 * (count - 1);
  const std::size_t hop = seg / 2;
  const auto d = static_cast<Eigen::Index>(traj.dim());
  if (traj.length() < seg) throw Error(ErrorCode::UsageError, "trajectory shorter than one periodogram segment");

  std::vector<double> window(seg);
  double w2 = 0.0;
  for (std::size_t t = 0; t < seg; ++t) {
    window[t] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(seg));
    w2 += window[t] * window[t];
  }
  Eigen::MatrixXcd dft_matrix(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(seg));
  for (std::size_t f = 0; f < count; ++f) {
    for (std::size_t t = 0; t < seg; ++t) {
      dft_matrix(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(t)) = std::polar(
          1.0, -2.0 * std::numbers::pi * static_cast<double>((f * t) % seg) / static_cast<double>(seg));
    }
  }

  std::vector<Eigen::MatrixXcd> raw(count, Eigen::MatrixXcd::Zero(d, d));
  std::size_t segments = 0;
  Eigen::MatrixXcd tapered(static_cast<Eigen::Index>(seg), d);
  Eigen::MatrixXcd transformed(static_cast<Eigen::Index>(count), d);
  for (std::size_t start = 0; start + seg <= traj.length(); start += hop, ++segments) {
    for (std::size_t t = 0; t < seg; ++t) {
      tapered.row(static_cast<Eigen::Index>(t)) =
          (window[t] * traj.samples.row(static_cast<Eigen::Index>(start + t))).cast<Complex>();
    }
    transformed.noalias() = dft_matrix * tapered;
    for (std::size_t f = 0; f < count; ++f) {
      const auto row = transformed.row(static_cast<Eigen::Index>(f));
      raw[f].noalias() += row.transpose() * row.conjugate();
    }
  }
  const double scale = 1.0 / (2.0 * std::numbers::pi * w2 * static_cast<double>(segments));
  for (auto& m : raw) m *= scale;

  // Real data: I(-lambda) = conj I(lambda) and I(pi + x) = conj I(pi - x).
  const auto last = static_cast<long>(count - 1);
  auto bin = [&](long f) -> Eigen::MatrixXcd {
    if (f < 0) return raw[static_cast<std::size_t>(-f)].conjugate();
    if (f > last) return raw[static_cast<std::size_t>(2 * last - f)].conjugate();
    return raw[static_cast<std::size_t>(f)];
  };
  std::vector<Eigen::MatrixXcd> smooth;
  smooth.reserve(count);
  const auto hw = static_cast<long>(half_width);
  for (long f = 0; f <= last; ++f) {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(d, d);
    for (long o = -hw; o <= hw; ++o) acc += bin(f + o);
    smooth.push_back(acc / static_cast<double>(2 * hw + 1));
  }
  return FrequencyMatrix(FrequencyGrid::uniform(count), std::move(smooth));
}

}  // namespace varcause
