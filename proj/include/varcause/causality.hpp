#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "varcause/error.hpp"
#include "varcause/marginal.hpp"
#include "varcause/model.hpp"
#include "varcause/spectral.hpp"

namespace varcause {

inline constexpr double kDtfZeroThreshold = 1e-10;
inline constexpr double kCoefficientSignificance = 1e-6;

struct GcEvidence {
  bool causes = false;
  double max_abs_coeff = 0.0;  ///< largest |coefficient| from source into target
  double threshold = 0.0;      ///< the level max_abs_coeff was compared against
};

/// Source Granger-causes target in the full model iff some A(u)(target,
/// source) is nonzero. Coefficients are exact user input, so the test is
/// structural.
inline GcEvidence multivariate_gc(const VarModel& model, const ChannelPair& pair) {
  validate_pair(pair, model.dim());
  GcEvidence ev;
  for (const auto& a : model.coeffs()) {
    ev.max_abs_coeff = std::max(
        ev.max_abs_coeff, std::abs(a(static_cast<Eigen::Index>(pair.target), static_cast<Eigen::Index>(pair.source))));
  }
  ev.causes = ev.max_abs_coeff > 0.0;
  return ev;
}

/// Coefficient-significance level for a marginal representation:
/// 1e-6 * ||V||_F^{1/2}.
inline double significance_threshold(const MarginalAR& rep) {
  return kCoefficientSignificance * std::sqrt(rep.innov_cov.norm());
}

/// Evidence of row <- col influence inside a bivariate representation.
inline GcEvidence gc_from_marginal(const MarginalAR& rep, Eigen::Index row, Eigen::Index col) {
  GcEvidence ev;
  for (const auto& phi : rep.phis) ev.max_abs_coeff = std::max(ev.max_abs_coeff, std::abs(phi(row, col)));
  ev.threshold = significance_threshold(rep);
  ev.causes = ev.max_abs_coeff > ev.threshold;
  return ev;
}

/// Bivariate Granger causality: the source's past enters the target's
/// equation of the exact two-channel autoregressive representation.
/// NotConvergedError propagates; its best() holds the partial evidence.
inline GcEvidence bivariate_gc(const VarModel& model, const ChannelPair& pair, std::size_t q_max = kDefaultMaxOrder,
                               double tol = kDefaultMarginalTol) {
  const MarginalAR rep = marginal_representation(model, pair, q_max, tol);
  return gc_from_marginal(rep, 0, 1);
}

struct PairVerdict {
  ChannelPair pair;
  bool dtf_zero = false;
  bool bivariate_gc = false;
  bool multivariate_gc = false;
  bool contradiction = false;
  double max_dtf = 0.0;        ///< sup over grid of the normalized DTF target <- source
  double max_marginal = 0.0;   ///< max_u |Phi(u)(target, source)|
  double max_full = 0.0;       ///< max_u |A(u)(target, source)|
  std::optional<std::string> error;
};

struct CausalityReport {
  std::size_t dim = 0;
  std::size_t grid_count = 0;
  std::vector<PairVerdict> pairs;  ///< ordered by (target, source)

  std::vector<PairVerdict> contradictions() const {
    std::vector<PairVerdict> out;
    std::copy_if(pairs.begin(), pairs.end(), std::back_inserter(out), [](const auto& p) { return p.contradiction; });
    return out;
  }
  const PairVerdict* find(std::size_t target, std::size_t source) const {
    for (const auto& p : pairs)
      if (p.pair.target == target && p.pair.source == source) return &p;
    return nullptr;
  }
};

/// DTF, bivariate GC and multivariate GC for every ordered channel pair, with
/// a contradiction flag where the DTF disagrees with Granger causality:
/// dtf_zero with bivariate GC present, or nonzero DTF without multivariate GC.
/// Per-pair failures are recorded in PairVerdict::error; the other pairs are
/// still evaluated.
inline CausalityReport full_report(const VarModel& model, const FrequencyGrid& grid,
                                   std::size_t q_max = kDefaultMaxOrder, double tol = kDefaultMarginalTol) {
  const std::size_t d = model.dim();
  CausalityReport report{d, grid.size(), {}};

  std::optional<DtfTable> table;
  std::string dtf_error;
  try {
    table = dtf(model, grid, /*normalized=*/true);
  } catch (const Error& e) {
    dtf_error = e.what();
  }

  // One marginalization per unordered pair {a < b}, read in both directions.
  std::map<std::pair<std::size_t, std::size_t>, MarginalAR> reps;
  std::map<std::pair<std::size_t, std::size_t>, std::string> rep_errors;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      try {
        reps.emplace(std::pair{a, b}, marginal_representation(model, ChannelPair{a, b}, q_max, tol));
      } catch (const NotConvergedError& e) {
        reps.emplace(std::pair{a, b}, e.best());
        rep_errors.emplace(std::pair{a, b}, e.what());
      } catch (const Error& e) {
        rep_errors.emplace(std::pair{a, b}, e.what());
      }
    }
  }

  for (std::size_t target = 0; target < d; ++target) {
    for (std::size_t source = 0; source < d; ++source) {
      if (target == source) continue;
      PairVerdict v;
      v.pair = ChannelPair{target, source};
      const auto full = multivariate_gc(model, v.pair);
      v.multivariate_gc = full.causes;
      v.max_full = full.max_abs_coeff;

      std::string err = dtf_error;
      if (table) {
        v.max_dtf = table->sup(target, source);
        v.dtf_zero = v.max_dtf < kDtfZeroThreshold;
      }
      const auto key = std::pair{std::min(target, source), std::max(target, source)};
      if (auto it = reps.find(key); it != reps.end()) {
        // Rep retains (min, max): target is row 0 iff target < source.
        const Eigen::Index row = target < source ? 0 : 1;
        const auto ev = gc_from_marginal(it->second, row, 1 - row);
        v.bivariate_gc = ev.causes;
        v.max_marginal = ev.max_abs_coeff;
      }
      if (auto it = rep_errors.find(key); it != rep_errors.end()) err += (err.empty() ? "" : "; ") + it->second;
      if (!err.empty()) v.error = err;
      if (table) v.contradiction = (v.dtf_zero && v.bivariate_gc) || (!v.dtf_zero && !v.multivariate_gc);
      report.pairs.push_back(std::move(v));
    }
  }
  return report;
}

}  // namespace varcause
