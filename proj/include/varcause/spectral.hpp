#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "varcause/error.hpp"
#include "varcause/model.hpp"

namespace varcause {

using Complex = std::complex<double>;

inline constexpr std::size_t kDefaultGridCount = 257;
inline constexpr double kInversionResidualTol = 1e-10;

/// Sorted frequencies in radians per sample, all within [0, pi].
class FrequencyGrid {
 public:
  explicit FrequencyGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw Error(ErrorCode::InvalidGrid, "grid needs at least 2 points");
    for (std::size_t g = 0; g < points_.size(); ++g) {
      const double x = points_[g];
      if (!(x >= 0.0 && x <= std::numbers::pi)) {
        throw Error(ErrorCode::InvalidGrid, "frequency " + std::to_string(x) + " outside [0, pi]");
      }
      if (g > 0 && !(x > points_[g - 1])) {
        throw Error(ErrorCode::InvalidGrid, "grid must be strictly increasing");
      }
    }
  }

  /// `count` equally spaced points on [0, pi], endpoints included.
  static FrequencyGrid uniform(std::size_t count = kDefaultGridCount) {
    if (count < 2) throw Error(ErrorCode::InvalidGrid, "grid needs at least 2 points");
    std::vector<double> pts(count);
    for (std::size_t g = 0; g < count; ++g) {
      pts[g] = std::numbers::pi * static_cast<double>(g) / static_cast<double>(count - 1);
    }
    pts.back() = std::numbers::pi;
    return FrequencyGrid(std::move(pts));
  }

  /// Frequencies in Hz at sampling rate `fs`, converted to 2 pi f / fs.
  static FrequencyGrid from_hz(const std::vector<double>& hz, double fs) {
    if (!(fs > 0.0) || !std::isfinite(fs)) throw Error(ErrorCode::InvalidGrid, "sampling rate must be positive");
    std::vector<double> pts;
    pts.reserve(hz.size());
    for (double f : hz) pts.push_back(2.0 * std::numbers::pi * f / fs);
    return FrequencyGrid(std::move(pts));
  }

  std::size_t size() const noexcept { return points_.size(); }
  double operator[](std::size_t g) const { return points_[g]; }
  const std::vector<double>& points() const noexcept { return points_; }

  friend bool operator==(const FrequencyGrid&, const FrequencyGrid&) = default;

 private:
  std::vector<double> points_;
};

/// Complex matrix-valued function sampled on a grid; one matrix per point.
class FrequencyMatrix {
 public:
  FrequencyMatrix(FrequencyGrid grid, std::vector<Eigen::MatrixXcd> values)
      : grid_(std::make_shared<const FrequencyGrid>(std::move(grid))), values_(std::move(values)) {
    check();
  }
  FrequencyMatrix(std::shared_ptr<const FrequencyGrid> grid, std::vector<Eigen::MatrixXcd> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    check();
  }

  const FrequencyGrid& grid() const noexcept { return *grid_; }
  std::shared_ptr<const FrequencyGrid> shared_grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  Eigen::Index rows() const noexcept { return values_.front().rows(); }
  Eigen::Index cols() const noexcept { return values_.front().cols(); }
  const Eigen::MatrixXcd& operator[](std::size_t g) const { return values_[g]; }
  const std::vector<Eigen::MatrixXcd>& values() const noexcept { return values_; }

  /// Applies `fn` to every value, keeping the grid.
  template <typename Fn>
  FrequencyMatrix map(Fn&& fn) const {
    std::vector<Eigen::MatrixXcd> out;
    out.reserve(values_.size());
    for (std::size_t g = 0; g < values_.size(); ++g) out.push_back(fn(values_[g], (*grid_)[g]));
    return FrequencyMatrix(grid_, std::move(out));
  }

 private:
  void check() const {
    if (values_.size() != grid_->size()) {
      throw Error(ErrorCode::ShapeMismatch, "one matrix per grid point required");
    }
    for (const auto& v : values_) {
      if (v.rows() != values_.front().rows() || v.cols() != values_.front().cols()) {
        throw Error(ErrorCode::ShapeMismatch, "inconsistent matrix dimensions across grid");
      }
    }
  }

  std::shared_ptr<const FrequencyGrid> grid_;
  std::vector<Eigen::MatrixXcd> values_;
};

/// A(lambda) = I - sum_u A(u) exp(-i u lambda) at one frequency.
inline Eigen::MatrixXcd char_polynomial_at(const VarModel& model, double lambda) {
  const auto d = static_cast<Eigen::Index>(model.dim());
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(d, d);
  for (std::size_t u = 1; u <= model.order(); ++u) {
    const Complex phase = std::polar(1.0, -static_cast<double>(u) * lambda);
    a -= phase * model.coeff(u).cast<Complex>();
  }
  return a;
}

inline FrequencyMatrix char_polynomial(const VarModel& model, const FrequencyGrid& grid) {
  std::vector<Eigen::MatrixXcd> values;
  values.reserve(grid.size());
  for (double lambda : grid.points()) values.push_back(char_polynomial_at(model, lambda));
  return FrequencyMatrix(grid, std::move(values));
}

/// Pivoted-LU inverse of a square complex matrix; throws SingularAtFrequency
/// when the inverse does not satisfy inv * m = I to 1e-10 (Frobenius).
inline Eigen::MatrixXcd invert_at(const Eigen::MatrixXcd& m, double lambda, const std::string& what) {
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(m);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::SingularAtFrequency, what + " singular at lambda=" + std::to_string(lambda));
  }
  Eigen::MatrixXcd inv = lu.inverse();
  const double residual = (inv * m - Eigen::MatrixXcd::Identity(m.rows(), m.cols())).norm();
  if (!(residual < kInversionResidualTol)) {
    throw Error(ErrorCode::SingularAtFrequency, what + " ill-conditioned at lambda=" + std::to_string(lambda) +
                                                    " (inversion residual " + std::to_string(residual) + ")");
  }
  return inv;
}

/// H(lambda) = A(lambda)^{-1}.
inline FrequencyMatrix transfer_function(const VarModel& model, const FrequencyGrid& grid) {
  return char_polynomial(model, grid).map(
      [](const Eigen::MatrixXcd& a, double lambda) { return invert_at(a, lambda, "A(lambda)"); });
}

/// f(lambda) = H Sigma H^* / (2 pi).
inline FrequencyMatrix spectral_density(const VarModel& model, const FrequencyGrid& grid) {
  const Eigen::MatrixXcd sigma = model.sigma().cast<Complex>();
  return transfer_function(model, grid).map([&](const Eigen::MatrixXcd& h, double) -> Eigen::MatrixXcd {
    Eigen::MatrixXcd f = h * sigma * h.adjoint() / (2.0 * std::numbers::pi);
    return 0.5 * (f + f.adjoint());
  });
}

/// Directed transfer function on a grid. values[g](j, k) is the influence
/// j <- k at grid point g: |H_jk|^2, or |H_jk|^2 / sum_m |H_jm|^2 when
/// normalized.
struct DtfTable {
  std::shared_ptr<const FrequencyGrid> grid;
  std::vector<Eigen::MatrixXd> values;
  bool normalized = false;

  /// sup over the grid of the j <- k entry.
  double sup(std::size_t target, std::size_t source) const {
    double best = 0.0;
    for (const auto& v : values) {
      best = std::max(best, v(static_cast<Eigen::Index>(target), static_cast<Eigen::Index>(source)));
    }
    return best;
  }
};

inline DtfTable dtf_from_transfer(const FrequencyMatrix& transfer, bool normalized) {
  DtfTable table{transfer.shared_grid(), {}, normalized};
  table.values.reserve(transfer.size());
  for (std::size_t g = 0; g < transfer.size(); ++g) {
    Eigen::MatrixXd power = transfer[g].cwiseAbs2();
    if (normalized) {
      for (Eigen::Index j = 0; j < power.rows(); ++j) {
        const double row = power.row(j).sum();
        if (!(row > 0.0)) {
          throw Error(ErrorCode::DegenerateRow, "transfer-function row " + std::to_string(j + 1) +
                                                    " vanishes at lambda=" + std::to_string(transfer.grid()[g]));
        }
        power.row(j) /= row;
      }
    }
    table.values.push_back(std::move(power));
  }
  return table;
}

inline DtfTable dtf(const VarModel& model, const FrequencyGrid& grid, bool normalized) {
  return dtf_from_transfer(transfer_function(model, grid), normalized);
}

}  // namespace varcause
