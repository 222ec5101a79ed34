#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "varcause/causality.hpp"
#include "varcause/error.hpp"
#include "varcause/estimate.hpp"
#include "varcause/marginal.hpp"
#include "varcause/model.hpp"
#include "varcause/moments.hpp"
#include "varcause/reduction.hpp"
#include "varcause/spectral.hpp"

namespace varcause::io {

using nlohmann::json;

/// %.17g, which round-trips every double.
inline std::string format_double(double x) {
  if (!std::isfinite(x)) return "null";
  if (x == 0.0 && std::signbit(x)) return "-0.0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Byte-stable JSON: object keys sorted, floats with 17 significant digits,
/// two-space indentation.
inline void write_json(std::ostream& out, const json& value, int indent = 0) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (value.type()) {
    case json::value_t::object: {
      if (value.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      bool first = true;
      for (const auto& [key, item] : value.items()) {
        if (!first) out << ",\n";
        first = false;
        out << pad << json(key).dump() << ": ";
        write_json(out, item, indent + 2);
      }
      out << "\n" << close << "}";
      return;
    }
    case json::value_t::array: {
      if (value.empty()) {
        out << "[]";
        return;
      }
      out << "[\n";
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i) out << ",\n";
        out << pad;
        write_json(out, value[i], indent + 2);
      }
      out << "\n" << close << "]";
      return;
    }
    case json::value_t::number_float:
      out << format_double(value.get<double>());
      return;
    default:
      out << value.dump();
  }
}

inline std::string to_json_string(const json& value) {
  std::ostringstream out;
  write_json(out, value);
  out << "\n";
  return out.str();
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& value, std::size_t dim, const std::string& field) {
  const auto d = static_cast<Eigen::Index>(dim);
  if (!value.is_array() || value.size() != dim) {
    throw Error(ErrorCode::ParseError, "field '" + field + "' must be a " + std::to_string(dim) + "x" +
                                           std::to_string(dim) + " array of rows");
  }
  Eigen::MatrixXd m(d, d);
  for (std::size_t r = 0; r < dim; ++r) {
    const auto& row = value[r];
    if (!row.is_array() || row.size() != dim) {
      throw Error(ErrorCode::ParseError, "field '" + field + "' row " + std::to_string(r + 1) + " must have " +
                                             std::to_string(dim) + " entries");
    }
    for (std::size_t c = 0; c < dim; ++c) {
      if (!row[c].is_number()) {
        throw Error(ErrorCode::ParseError, "field '" + field + "' entry (" + std::to_string(r + 1) + "," +
                                               std::to_string(c + 1) + ") is not a number");
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

/// {"dim": d, "order": p, "coeffs": [A(1), ..., A(p)], "sigma": S}, each
/// matrix an array of rows.
inline json model_to_json(const VarModel& model) {
  json coeffs = json::array();
  for (const auto& a : model.coeffs()) coeffs.push_back(matrix_to_json(a));
  return json{{"dim", model.dim()}, {"order", model.order()}, {"coeffs", coeffs}, {"sigma", matrix_to_json(model.sigma())}};
}

inline VarModel model_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "model document must be a JSON object");
  for (const char* key : {"dim", "order", "coeffs", "sigma"}) {
    if (!doc.contains(key)) throw Error(ErrorCode::ParseError, std::string("missing field '") + key + "'");
  }
  if (!doc["dim"].is_number_unsigned() || doc["dim"].get<std::size_t>() == 0) {
    throw Error(ErrorCode::ParseError, "field 'dim' must be a positive integer");
  }
  if (!doc["order"].is_number_unsigned()) {
    throw Error(ErrorCode::ParseError, "field 'order' must be a non-negative integer");
  }
  const auto dim = doc["dim"].get<std::size_t>();
  const auto order = doc["order"].get<std::size_t>();
  const auto& coeffs_json = doc["coeffs"];
  if (!coeffs_json.is_array() || coeffs_json.size() != order) {
    throw Error(ErrorCode::ParseError, "field 'coeffs' must hold exactly 'order' = " + std::to_string(order) +
                                           " matrices");
  }
  std::vector<Eigen::MatrixXd> coeffs;
  for (std::size_t u = 0; u < order; ++u) {
    coeffs.push_back(matrix_from_json(coeffs_json[u], dim, "coeffs[" + std::to_string(u + 1) + "]"));
  }
  return make_var(std::move(coeffs), matrix_from_json(doc["sigma"], dim, "sigma"));
}

inline VarModel parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return model_from_json(doc);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

inline VarModel load_model(const std::string& path) { return parse_model(read_file(path)); }

/// CSV: `lambda,re_1_1,im_1_1,re_1_2,...` with 1-based (row, col) labels,
/// entries in row-major order, one row per grid point.
inline void write_frequency_csv(std::ostream& out, const FrequencyMatrix& fm) {
  out << "lambda";
  for (Eigen::Index r = 0; r < fm.rows(); ++r)
    for (Eigen::Index c = 0; c < fm.cols(); ++c) out << ",re_" << r + 1 << "_" << c + 1 << ",im_" << r + 1 << "_" << c + 1;
  out << "\n";
  for (std::size_t g = 0; g < fm.size(); ++g) {
    out << format_double(fm.grid()[g]);
    for (Eigen::Index r = 0; r < fm.rows(); ++r)
      for (Eigen::Index c = 0; c < fm.cols(); ++c)
        out << "," << format_double(fm[g](r, c).real()) << "," << format_double(fm[g](r, c).imag());
    out << "\n";
  }
}

/// CSV: `lambda,dtf_1_2,...`, column dtf_j_k is the influence j <- k.
inline void write_dtf_csv(std::ostream& out, const DtfTable& table) {
  const auto d = table.values.front().rows();
  out << "lambda";
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = 0; k < d; ++k)
      if (j != k) out << ",dtf_" << j + 1 << "_" << k + 1;
  out << "\n";
  for (std::size_t g = 0; g < table.values.size(); ++g) {
    out << format_double((*table.grid)[g]);
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k)
        if (j != k) out << "," << format_double(table.values[g](j, k));
    out << "\n";
  }
}

/// CSV: `lag,g_1_1,g_1_2,...`, row-major entries of Gamma(lag).
inline void write_autocov_csv(std::ostream& out, const AutocovSequence& seq) {
  const auto d = static_cast<Eigen::Index>(seq.dim());
  out << "lag";
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) out << ",g_" << r + 1 << "_" << c + 1;
  out << "\n";
  for (std::size_t h = 0; h < seq.gammas.size(); ++h) {
    out << h;
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c) out << "," << format_double(seq.gammas[h](r, c));
    out << "\n";
  }
}

/// CSV: header `t,ch1,...,chd`, one row per time point.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t";
  for (std::size_t c = 0; c < traj.dim(); ++c) out << ",ch" << c + 1;
  out << "\n";
  for (std::size_t t = 0; t < traj.length(); ++t) {
    out << t;
    for (std::size_t c = 0; c < traj.dim(); ++c) {
      out << "," << format_double(traj.samples(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)));
    }
    out << "\n";
  }
}

inline Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "line 1: empty trajectory file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "t") {
    throw Error(ErrorCode::ParseError, "line 1: header must be t,ch1,...,chd");
  }
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c] != "ch" + std::to_string(c)) {
      throw Error(ErrorCode::ParseError, "line 1: expected column 'ch" + std::to_string(c) + "'");
    }
  }
  const std::size_t d = header.size() - 1;
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col > 0) {
        try {
          std::size_t used = 0;
          const double v = std::stod(cell, &used);
          if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
          values.push_back(v);
        } catch (const std::exception&) {
          throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": column " + header[col] +
                                                 " is not a finite number");
        }
      }
      ++col;
    }
    if (col != d + 1) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " + std::to_string(d + 1) +
                                             " columns, got " + std::to_string(col));
    }
    ++rows;
  }
  Trajectory traj{Eigen::MatrixXd(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d)), 0};
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t c = 0; c < d; ++c)
      traj.samples(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = values[t * d + c];
  return traj;
}

/// Channel pair in 1-based user notation.
inline json pair_to_json(const ChannelPair& pair) {
  return json{{"target", pair.target + 1}, {"source", pair.source + 1}};
}

inline json marginal_to_json(const MarginalAR& rep) {
  json phis = json::array();
  for (const auto& phi : rep.phis) phis.push_back(matrix_to_json(phi));
  return json{{"channels", json::array({rep.pair.target + 1, rep.pair.source + 1})},
              {"order_used", rep.order_used()},
              {"phis", phis},
              {"innov_cov", matrix_to_json(rep.innov_cov)},
              {"convergence",
               {{"tail_norm", rep.convergence.tail_norm},
                {"v_delta", rep.convergence.v_delta},
                {"converged", rep.convergence.converged},
                {"toeplitz_condition", rep.convergence.toeplitz_condition}}}};
}

inline json verdict_to_json(const PairVerdict& v) {
  json out{{"target", v.pair.target + 1},
           {"source", v.pair.source + 1},
           {"dtf_zero", v.dtf_zero},
           {"bivariate_gc", v.bivariate_gc},
           {"multivariate_gc", v.multivariate_gc},
           {"contradiction", v.contradiction},
           {"max_dtf", v.max_dtf},
           {"max_abs_marginal_coeff", v.max_marginal},
           {"max_abs_full_coeff", v.max_full}};
  if (v.error) out["error"] = *v.error;
  return out;
}

inline json report_to_json(const CausalityReport& report) {
  json pairs = json::array();
  for (const auto& v : report.pairs) pairs.push_back(verdict_to_json(v));
  json contradictions = json::array();
  for (const auto& v : report.contradictions()) contradictions.push_back(pair_to_json(v.pair));
  return json{{"dim", report.dim}, {"grid_count", report.grid_count}, {"pairs", pairs}, {"contradictions", contradictions}};
}

/// Whiteness verdict of a spectrum, in both scalings: `whiteness_deficit` is
/// measured on 2 pi f, `whiteness_deficit_f` on f.
inline json whiteness_to_json(const FrequencyMatrix& spectrum) {
  const double deficit = whiteness_deficit(spectrum);
  const double scale = mean_scaled_spectrum(spectrum).norm();
  return json{{"whiteness_deficit", deficit},
              {"whiteness_deficit_f", deficit / (2.0 * std::numbers::pi)},
              {"relative_deficit", scale > 0.0 ? deficit / scale : 0.0},
              {"is_white", is_white(spectrum)}};
}

inline void write_table(std::ostream& out, const CausalityReport& report) {
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %-10s %-10s %-10s %-14s %-12s %-12s %-12s\n", "pair", "dtf_zero", "biv_gc",
                "mv_gc", "contradiction", "max_dtf", "max|Phi|", "max|A|");
  out << line;
  for (const auto& v : report.pairs) {
    const std::string pair = std::to_string(v.pair.target + 1) + "<-" + std::to_string(v.pair.source + 1);
    std::snprintf(line, sizeof line, "%-8s %-10s %-10s %-10s %-14s %-12.4g %-12.4g %-12.4g\n", pair.c_str(),
                  v.dtf_zero ? "yes" : "no", v.bivariate_gc ? "yes" : "no", v.multivariate_gc ? "yes" : "no",
                  v.contradiction ? "YES" : "-", v.max_dtf, v.max_marginal, v.max_full);
    out << line;
    if (v.error) out << "  error: " << *v.error << "\n";
  }
}

}  // namespace varcause::io
