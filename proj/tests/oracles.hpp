#pragma once

// Independent reference computations used only by the tests. None of these
// go through the library's Lyapunov, Whittle or frequency-domain routes.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "varcause/model.hpp"

namespace varcause::oracle {

/// Impulse responses Psi(0..n-1): X(t) = sum_k Psi(k) e(t-k).
inline std::vector<Eigen::MatrixXd> impulse_responses(const VarModel& model, std::size_t n) {
  const auto d = static_cast<Eigen::Index>(model.dim());
  std::vector<Eigen::MatrixXd> psi(n, Eigen::MatrixXd::Zero(d, d));
  psi[0].setIdentity();
  for (std::size_t k = 1; k < n; ++k)
    for (std::size_t u = 1; u <= std::min(k, model.order()); ++u) psi[k] += model.coeff(u) * psi[k - u];
  return psi;
}

/// Gamma(h) = E[X(t) X(t-h)'] = sum_k Psi(k+h) Sigma Psi(k)', truncated MA sum.
inline std::vector<Eigen::MatrixXd> ma_autocov(const VarModel& model, std::size_t maxlag, std::size_t terms = 4000) {
  const auto psi = impulse_responses(model, terms + maxlag + 1);
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t h = 0; h <= maxlag; ++h) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(model.dim(), model.dim());
    for (std::size_t k = 0; k < terms; ++k) g += psi[k + h] * model.sigma() * psi[k].transpose();
    out.push_back(g);
  }
  return out;
}

inline Eigen::MatrixXd gamma_at(const std::vector<Eigen::MatrixXd>& g, long h) {
  return h >= 0 ? g[static_cast<std::size_t>(h)] : g[static_cast<std::size_t>(-h)].transpose();
}

/// Order-q forward predictor by solving the stacked Yule-Walker system
/// [Phi(1) .. Phi(q)] T = [Gamma(1) .. Gamma(q)] with a dense solver.
struct DenseProjection {
  std::vector<Eigen::MatrixXd> phis;
  Eigen::MatrixXd v;
};

inline DenseProjection dense_yule_walker(const std::vector<Eigen::MatrixXd>& g, std::size_t q) {
  const auto d = g[0].rows();
  const auto n = static_cast<Eigen::Index>(q);
  DenseProjection out;
  if (q == 0) {
    out.v = g[0];
    return out;
  }
  Eigen::MatrixXd t(n * d, n * d), rhs(d, n * d);
  for (Eigen::Index i = 0; i < n; ++i) {
    rhs.block(0, i * d, d, d) = g[static_cast<std::size_t>(i + 1)];
    // Row block i of T is E[X(t-1-i) (X(t-1)..X(t-q))'] -> block (i, j) = Gamma(j - i).
    for (Eigen::Index j = 0; j < n; ++j) t.block(i * d, j * d, d, d) = gamma_at(g, j - i);
  }
  // Phi T = rhs  <=>  T' Phi' = rhs'.
  const Eigen::MatrixXd phi = t.transpose().fullPivLu().solve(rhs.transpose()).transpose();
  out.v = g[0];
  for (Eigen::Index u = 0; u < n; ++u) {
    out.phis.push_back(phi.block(0, u * d, d, d));
    out.v -= out.phis.back() * g[static_cast<std::size_t>(u + 1)].transpose();
  }
  return out;
}

/// Trace of E[(X(t) - sum Phi(u) X(t-u))(...)'] for arbitrary coefficients.
inline double prediction_error_trace(const std::vector<Eigen::MatrixXd>& g, const std::vector<Eigen::MatrixXd>& phis) {
  Eigen::MatrixXd v = g[0];
  const long q = static_cast<long>(phis.size());
  for (long u = 1; u <= q; ++u) {
    const auto& pu = phis[static_cast<std::size_t>(u - 1)];
    v -= pu * gamma_at(g, u).transpose() + gamma_at(g, u) * pu.transpose();
    for (long w = 1; w <= q; ++w) v += pu * gamma_at(g, w - u) * phis[static_cast<std::size_t>(w - 1)].transpose();
  }
  return v.trace();
}

/// (1/2pi) sum_{|h| <= H} Gamma(h) e^{-i h lambda}.
inline Eigen::MatrixXcd fourier_spectrum(const std::vector<Eigen::MatrixXd>& g, double lambda) {
  using C = std::complex<double>;
  Eigen::MatrixXcd f = g[0].cast<C>();
  for (std::size_t h = 1; h < g.size(); ++h) {
    const double x = static_cast<double>(h) * lambda;
    f += std::polar(1.0, -x) * g[h].cast<C>() + std::polar(1.0, x) * g[h].transpose().cast<C>();
  }
  return f / (2.0 * std::numbers::pi);
}

/// Characteristic polynomial coefficients c_0..c_n of det(x I - M) by
/// Faddeev-LeVerrier, c_n = 1.
inline std::vector<double> char_poly_coeffs(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  std::vector<double> c(static_cast<std::size_t>(n + 1), 0.0);
  c[static_cast<std::size_t>(n)] = 1.0;
  Eigen::MatrixXd mk = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    mk = m * mk + c[static_cast<std::size_t>(n - k + 1)] * Eigen::MatrixXd::Identity(n, n);
    c[static_cast<std::size_t>(n - k)] = -(m * mk).trace() / static_cast<double>(k);
  }
  return c;
}

/// Sample series built from a moving average of a white-noise matrix:
/// out(t) = sum_lag weights[lag] * noise(t - lag), for t >= max lag.
inline Eigen::VectorXd moving_average(const Eigen::MatrixXd& noise,
                                      const std::vector<std::pair<std::size_t, Eigen::RowVectorXd>>& terms,
                                      std::size_t max_lag) {
  const auto n = noise.rows() - static_cast<Eigen::Index>(max_lag);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (const auto& [lag, w] : terms) {
    out += noise.middleRows(static_cast<Eigen::Index>(max_lag - lag), n) * w.transpose();
  }
  return out;
}

}  // namespace varcause::oracle
