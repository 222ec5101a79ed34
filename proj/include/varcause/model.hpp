#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "varcause/error.hpp"
#include "varcause/rng.hpp"

namespace varcause {

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kPsdFloor = -1e-10;
inline constexpr double kStabilityMargin = 1e-10;

/// Ordered channel pair, 0-based. `source` drives `target` in the causal
/// statements built on top of it; for marginalization the pair is read as the
/// retained set S = (first, second) = (target, source) unless noted.
struct ChannelPair {
  std::size_t target = 0;
  std::size_t source = 1;

  friend bool operator==(const ChannelPair&, const ChannelPair&) = default;
};

inline void validate_pair(const ChannelPair& pair, std::size_t dim) {
  if (pair.target >= dim || pair.source >= dim) {
    throw Error(ErrorCode::InvalidPair, "channel index out of range for dim " + std::to_string(dim));
  }
  if (pair.target == pair.source) {
    throw Error(ErrorCode::InvalidPair, "pair channels must be distinct");
  }
}

/// Largest |eigenvalue| of a real square matrix.
inline double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Companion (state-space) lift of lag matrices: [[A(1) ... A(p)], [I 0]].
inline Eigen::MatrixXd companion_of(const std::vector<Eigen::MatrixXd>& coeffs) {
  if (coeffs.empty()) throw Error(ErrorCode::OrderZero, "companion matrix needs order >= 1");
  const auto d = coeffs.front().rows();
  const auto p = static_cast<Eigen::Index>(coeffs.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d * p, d * p);
  for (Eigen::Index u = 0; u < p; ++u) c.block(0, u * d, d, d) = coeffs[static_cast<std::size_t>(u)];
  if (p > 1) c.block(d, 0, d * (p - 1), d * (p - 1)).setIdentity();
  return c;
}

/// Stationary VAR(p) process X(t) = sum_u A(u) X(t-u) + e(t), var(e) = sigma.
///
/// A(u)(j, k) is the weight of channel k at lag u in the equation of channel
/// j. Instances are only produced by make_var and friends, which enforce
/// symmetric PSD sigma and strict stability, and are immutable afterwards.
class VarModel {
 public:
  std::size_t dim() const noexcept { return static_cast<std::size_t>(sigma_.rows()); }
  std::size_t order() const noexcept { return coeffs_.size(); }
  const std::vector<Eigen::MatrixXd>& coeffs() const noexcept { return coeffs_; }
  /// Lag matrix A(lag), 1-based lag.
  const Eigen::MatrixXd& coeff(std::size_t lag) const { return coeffs_.at(lag - 1); }
  const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
  double spectral_radius() const noexcept { return radius_; }

 private:
  VarModel(std::vector<Eigen::MatrixXd> coeffs, Eigen::MatrixXd sigma, double radius)
      : coeffs_(std::move(coeffs)), sigma_(std::move(sigma)), radius_(radius) {}

  friend VarModel make_var(std::vector<Eigen::MatrixXd> coeffs, Eigen::MatrixXd sigma);

  std::vector<Eigen::MatrixXd> coeffs_;
  Eigen::MatrixXd sigma_;
  double radius_ = 0.0;
};

inline void check_symmetric_psd(const Eigen::MatrixXd& m, const std::string& what) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::ShapeMismatch, what + " must be square");
  if (!m.allFinite()) throw Error(ErrorCode::NotPositiveSemiDefinite, what + " has non-finite entries");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym >= kSymmetryTol) {
    throw Error(ErrorCode::NotPositiveSemiDefinite,
                what + " is not symmetric (max deviation " + std::to_string(asym) + ")");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < kPsdFloor) {
    throw Error(ErrorCode::NotPositiveSemiDefinite,
                what + " has negative eigenvalue " + std::to_string(min_eig));
  }
}

/// Validating constructor. Throws ShapeMismatch, NotPositiveSemiDefinite or
/// Unstable (spectral radius of the companion >= 1 - 1e-10).
inline VarModel make_var(std::vector<Eigen::MatrixXd> coeffs, Eigen::MatrixXd sigma) {
  if (sigma.rows() == 0 || sigma.rows() != sigma.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "sigma must be a non-empty square matrix");
  }
  const auto d = sigma.rows();
  for (std::size_t u = 0; u < coeffs.size(); ++u) {
    if (coeffs[u].rows() != d || coeffs[u].cols() != d) {
      throw Error(ErrorCode::ShapeMismatch, "coefficient matrix at lag " + std::to_string(u + 1) +
                                                " is not " + std::to_string(d) + "x" + std::to_string(d));
    }
    if (!coeffs[u].allFinite()) {
      throw Error(ErrorCode::ShapeMismatch, "coefficient matrix at lag " + std::to_string(u + 1) +
                                                " has non-finite entries");
    }
  }
  check_symmetric_psd(sigma, "sigma");
  const double radius = coeffs.empty() ? 0.0 : varcause::spectral_radius(companion_of(coeffs));
  if (!(radius < 1.0 - kStabilityMargin)) {
    throw Error(ErrorCode::Unstable, "companion spectral radius " + std::to_string(radius) + " >= 1");
  }
  return VarModel(std::move(coeffs), std::move(sigma), radius);
}

inline Eigen::MatrixXd companion_matrix(const VarModel& model) { return companion_of(model.coeffs()); }

/// Trivariate example in which channel 2 drives nothing in the full model
/// yet predicts channel 1 once channel 3 is marginalized out:
///   X1(t) = alpha X3(t-2) + e1(t),  X2(t) = beta X3(t-1) + e2(t),  X3(t) = e3(t),
/// with var(e) = I. It carries a lag-2 term, so it is stored as order 2.
inline VarModel counterexample_model(double alpha, double beta) {
  std::vector<Eigen::MatrixXd> coeffs(2, Eigen::MatrixXd::Zero(3, 3));
  coeffs[0](1, 2) = beta;
  coeffs[1](0, 2) = alpha;
  return make_var(std::move(coeffs), Eigen::MatrixXd::Identity(3, 3));
}

/// Random stable VAR with dense Gaussian coefficients rescaled so the
/// companion spectral radius equals `radius`, and a random well-conditioned
/// innovation covariance. Scaling A(u) by c^u scales every companion
/// eigenvalue by c, which makes the target radius exact.
inline VarModel random_stable_var(std::size_t dim, std::size_t order, double radius, std::uint64_t seed) {
  PhiloxNormal normal(seed);
  const auto d = static_cast<Eigen::Index>(dim);
  std::vector<Eigen::MatrixXd> coeffs(order, Eigen::MatrixXd(d, d));
  for (auto& a : coeffs) {
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k) a(j, k) = normal() / std::sqrt(static_cast<double>(dim));
  }
  if (order > 0) {
    const double current = spectral_radius(companion_of(coeffs));
    if (current > 0.0) {
      const double c = radius / current;
      double scale = 1.0;
      for (auto& a : coeffs) {
        scale *= c;
        a *= scale;
      }
    }
  }
  Eigen::MatrixXd l(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = 0; k < d; ++k) l(j, k) = normal();
  Eigen::MatrixXd sigma = l * l.transpose() / static_cast<double>(dim) +
                          0.5 * Eigen::MatrixXd::Identity(d, d);
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  return make_var(std::move(coeffs), std::move(sigma));
}

}  // namespace varcause
