#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "varcause/error.hpp"
#include "varcause/model.hpp"
#include "varcause/moments.hpp"
#include "varcause/reduction.hpp"
#include "varcause/spectral.hpp"

namespace varcause {

inline constexpr std::size_t kDefaultMaxOrder = 128;
inline constexpr std::size_t kInitialOrder = 4;
inline constexpr double kDefaultMarginalTol = 1e-8;
inline constexpr double kInnovationPsdFloor = -1e-8;
inline constexpr double kSingularPivotRel = 1e-13;

struct Convergence {
  double tail_norm = 0.0;  ///< ||Phi(q)||_F
  double v_delta = 0.0;    ///< |tr V_q - tr V_{q-1}|
  bool converged = false;
  double toeplitz_condition = 1.0;  ///< 2-norm condition of the q-block Toeplitz system
};

/// Autoregressive representation of a channel subset obtained by projecting
/// X_S(t) on its own past: X_S(t) = sum_u Phi(u) X_S(t-u) + innovation.
/// For a pair, S = (pair.target, pair.source), so Phi(u)(0, 1) is the weight
/// of the source's past in the target's equation.
struct MarginalAR {
  ChannelPair pair;
  std::vector<Eigen::MatrixXd> phis;
  Eigen::MatrixXd innov_cov;
  Convergence convergence;

  std::size_t order_used() const noexcept { return phis.size(); }
};

class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& message, MarginalAR best)
      : Error(ErrorCode::NotConverged, message), best_(std::move(best)) {}
  const MarginalAR& best() const noexcept { return best_; }

 private:
  MarginalAR best_;
};

/// Multichannel Levinson-Whittle recursion on a block Toeplitz system.
///
/// Keeps forward coefficients Phi_m(1..m) (predict X(t) from X(t-1..t-m)),
/// backward coefficients Psi_m(1..m) (predict X(t-m) from X(t-m+1..t)) and
/// both prediction-error covariances; each step() raises the order by one.
class WhittleRecursion {
 public:
  explicit WhittleRecursion(AutocovSequence acov)
      : acov_(std::move(acov)), v_fwd_(acov_.gammas.at(0)), v_bwd_(acov_.gammas.at(0)), v_prev_trace_(v_fwd_.trace()) {
    scale_ = std::max(1.0, v_fwd_.diagonal().cwiseAbs().maxCoeff());
  }

  std::size_t order() const noexcept { return fwd_.size(); }
  const std::vector<Eigen::MatrixXd>& forward() const noexcept { return fwd_; }
  const Eigen::MatrixXd& forward_error_cov() const noexcept { return v_fwd_; }
  double previous_trace() const noexcept { return v_prev_trace_; }

  void step() {
    const std::size_t m = order() + 1;
    if (m > acov_.maxlag()) {
      throw Error(ErrorCode::ShapeMismatch, "autocovariances available only up to lag " + std::to_string(acov_.maxlag()));
    }
    // Delta = E[fwd error(t) X(t-m)'] = Gamma(m) - sum_u Phi(u) Gamma(m-u).
    Eigen::MatrixXd delta = acov_.at(static_cast<long>(m));
    for (std::size_t u = 1; u < m; ++u) delta -= fwd_[u - 1] * acov_.at(static_cast<long>(m - u));

    const Eigen::MatrixXd v_bwd_inv = checked_inverse(v_bwd_, m);
    const Eigen::MatrixXd v_fwd_inv = checked_inverse(v_fwd_, m);
    const Eigen::MatrixXd k_fwd = delta * v_bwd_inv;
    const Eigen::MatrixXd k_bwd = delta.transpose() * v_fwd_inv;

    std::vector<Eigen::MatrixXd> fwd(m), bwd(m);
    for (std::size_t u = 1; u < m; ++u) {
      fwd[u - 1] = fwd_[u - 1] - k_fwd * bwd_[m - u - 1];
      bwd[u - 1] = bwd_[u - 1] - k_bwd * fwd_[m - u - 1];
    }
    fwd[m - 1] = k_fwd;
    bwd[m - 1] = k_bwd;

    v_prev_trace_ = v_fwd_.trace();
    Eigen::MatrixXd v_fwd = v_fwd_ - k_fwd * delta.transpose();
    Eigen::MatrixXd v_bwd = v_bwd_ - k_bwd * delta;
    v_fwd_ = 0.5 * (v_fwd + v_fwd.transpose());
    v_bwd_ = 0.5 * (v_bwd + v_bwd.transpose());
    fwd_ = std::move(fwd);
    bwd_ = std::move(bwd);

    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(v_fwd_, Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .minCoeff();
    if (min_eig < kInnovationPsdFloor) {
      throw Error(ErrorCode::NumericalBreakdown, "innovation covariance lost positive semi-definiteness at order " +
                                                     std::to_string(m) + " (min eigenvalue " +
                                                     std::to_string(min_eig) + ")");
    }
  }

  const AutocovSequence& acov() const noexcept { return acov_; }

 private:
  Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& v, std::size_t m) const {
    const double min_eig =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(v, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (!(min_eig > kSingularPivotRel * scale_)) {
      throw Error(ErrorCode::SingularToeplitz, "block Toeplitz system singular at order " + std::to_string(m) +
                                                   " (subprocess is deterministic)");
    }
    return v.llt().solve(Eigen::MatrixXd::Identity(v.rows(), v.cols()));
  }

  AutocovSequence acov_;
  std::vector<Eigen::MatrixXd> fwd_;
  std::vector<Eigen::MatrixXd> bwd_;
  Eigen::MatrixXd v_fwd_;
  Eigen::MatrixXd v_bwd_;
  double v_prev_trace_ = 0.0;
  double scale_ = 1.0;
};

inline double toeplitz_condition(const AutocovSequence& acov, std::size_t blocks) {
  const auto eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(block_toeplitz(acov, std::max<std::size_t>(blocks, 1)),
                                                                  Eigen::EigenvaluesOnly)
                       .eigenvalues();
  const double lo = eig.minCoeff();
  return lo > 0.0 ? eig.maxCoeff() / lo : std::numeric_limits<double>::infinity();
}

inline MarginalAR snapshot(const WhittleRecursion& rec, const ChannelPair& pair, double tol) {
  MarginalAR rep{pair, rec.forward(), rec.forward_error_cov(), {}};
  rep.convergence.tail_norm = rec.order() == 0 ? 0.0 : rec.forward().back().norm();
  rep.convergence.v_delta = std::abs(rec.forward_error_cov().trace() - rec.previous_trace());
  rep.convergence.converged = rec.order() > 0 && rep.convergence.tail_norm < tol && rep.convergence.v_delta < tol;
  rep.convergence.toeplitz_condition = toeplitz_condition(rec.acov(), rec.order());
  return rep;
}

/// Order-q projection coefficients and innovation covariance of the process
/// with autocovariances `acov` (needs acov.maxlag() >= q).
inline MarginalAR whittle_recursion(const AutocovSequence& acov, std::size_t q, ChannelPair pair = {},
                                    double tol = kDefaultMarginalTol) {
  WhittleRecursion rec(acov);
  while (rec.order() < q) rec.step();
  return snapshot(rec, pair, tol);
}

/// Exact autoregressive representation of the pair S = (target, source),
/// increasing the order on the schedule 4, 8, 16, ... (capped at q_max) until
/// ||Phi(q)||_F < tol and the innovation trace has settled to within tol.
/// Throws NotConvergedError carrying the order-q_max result otherwise.
inline MarginalAR marginal_representation(const VarModel& model, const ChannelPair& pair,
                                          std::size_t q_max = kDefaultMaxOrder, double tol = kDefaultMarginalTol) {
  validate_pair(pair, model.dim());
  if (q_max == 0) throw Error(ErrorCode::UsageError, "q_max must be positive");
  WhittleRecursion rec(subprocess_autocov(autocov(model, q_max), pair));
  std::size_t checkpoint = std::min(kInitialOrder, q_max);
  while (true) {
    while (rec.order() < checkpoint) rec.step();
    const double tail = rec.forward().back().norm();
    const double v_delta = std::abs(rec.forward_error_cov().trace() - rec.previous_trace());
    if (tail < tol && v_delta < tol) return snapshot(rec, pair, tol);
    if (checkpoint == q_max) {
      throw NotConvergedError("marginal representation not converged at q_max=" + std::to_string(q_max) +
                                  " (tail " + std::to_string(tail) + ")",
                              snapshot(rec, pair, tol));
    }
    checkpoint = std::min(2 * checkpoint, q_max);
  }
}

/// Phi(lambda) = I - sum_u Phi(u) exp(-i u lambda).
inline Eigen::MatrixXcd ar_polynomial_at(const std::vector<Eigen::MatrixXd>& phis, Eigen::Index dim, double lambda) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(dim, dim);
  for (std::size_t u = 1; u <= phis.size(); ++u) {
    m -= std::polar(1.0, -static_cast<double>(u) * lambda) * phis[u - 1].cast<Complex>();
  }
  return m;
}

/// Spectrum of the residual of filtering the pair's exact spectrum by
/// Phi(lambda): Phi f_S Phi^*.
inline FrequencyMatrix innovation_spectrum(const VarModel& model, const ChannelPair& pair, const MarginalAR& rep,
                                           const FrequencyGrid& grid) {
  validate_pair(pair, model.dim());
  const std::vector<Eigen::Index> s{static_cast<Eigen::Index>(pair.target), static_cast<Eigen::Index>(pair.source)};
  return spectral_density(model, grid).map([&](const Eigen::MatrixXcd& f, double lambda) -> Eigen::MatrixXcd {
    const Eigen::MatrixXcd filter = ar_polynomial_at(rep.phis, 2, lambda);
    Eigen::MatrixXcd r = filter * select_block(f, s, s) * filter.adjoint();
    return 0.5 * (r + r.adjoint());
  });
}

/// whiteness_deficit of the implied residual spectrum; near zero certifies
/// that `rep` is a valid autoregressive representation of the pair.
inline double innovation_whiteness_check(const VarModel& model, const ChannelPair& pair, const MarginalAR& rep,
                                         const FrequencyGrid& grid) {
  return whiteness_deficit(innovation_spectrum(model, pair, rep, grid));
}

}  // namespace varcause
