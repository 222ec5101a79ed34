#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "varcause/varcause.hpp"

namespace varcause::cli {

using io::json;

/// Where the model comes from: a JSON model file, or the builtin
/// counterexample with its two path weights.
struct ModelSource {
  std::string path;
  std::string builtin;
  double alpha = 1.0;
  double beta = 1.0;
};

/// Parsed options shared by the subcommands.
struct RunConfig {
  ModelSource source;
  std::size_t grid_count = kDefaultGridCount;
  std::vector<double> freqs_hz;
  double fs = 0.0;
  std::string pair;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t q_max = kDefaultMaxOrder;
  double tol = kDefaultMarginalTol;
};

inline void check_finite_weights(const ModelSource& src) {
  if (!std::isfinite(src.alpha) || !std::isfinite(src.beta)) {
    throw Error(ErrorCode::UsageError, "alpha and beta must be finite");
  }
}

inline VarModel load(const ModelSource& src) {
  if (!src.path.empty() && !src.builtin.empty()) {
    throw Error(ErrorCode::UsageError, "give either --model or --builtin, not both");
  }
  if (!src.path.empty()) return io::load_model(src.path);
  if (src.builtin == "counterexample") {
    check_finite_weights(src);
    return counterexample_model(src.alpha, src.beta);
  }
  if (!src.builtin.empty()) throw Error(ErrorCode::UsageError, "unknown builtin model '" + src.builtin + "'");
  throw Error(ErrorCode::UsageError, "no model given (use --model FILE or --builtin counterexample)");
}

inline FrequencyGrid make_grid(const RunConfig& cfg) {
  if (!cfg.freqs_hz.empty()) {
    if (cfg.fs <= 0.0) throw Error(ErrorCode::UsageError, "--freqs-hz requires a positive --fs");
    return FrequencyGrid::from_hz(cfg.freqs_hz, cfg.fs);
  }
  return FrequencyGrid::uniform(cfg.grid_count);
}

/// "i,j" in 1-based notation -> retained pair S = (i, j).
inline ChannelPair parse_pair(const std::string& text, std::size_t dim) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw Error(ErrorCode::UsageError, "--pair expects i,j");
  std::size_t i = 0, j = 0;
  try {
    std::size_t used = 0;
    i = std::stoul(text.substr(0, comma), &used);
    if (used != comma) throw std::invalid_argument(text);
    const std::string rest = text.substr(comma + 1);
    j = std::stoul(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw Error(ErrorCode::UsageError, "--pair expects two positive integers i,j");
  }
  if (i == 0 || j == 0) throw Error(ErrorCode::UsageError, "--pair channels are 1-based");
  ChannelPair pair{i - 1, j - 1};
  validate_pair(pair, dim);
  return pair;
}

inline std::filesystem::path prepare_dir(const std::string& dir) {
  if (dir.empty()) throw Error(ErrorCode::UsageError, "--out DIR is required");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::IoError, "cannot create output directory '" + dir + "'");
  }
  // create_directories succeeds on existing read-only directories; probe.
  const auto probe = std::filesystem::path(dir) / ".varcause_write_probe";
  io::write_file(probe.string(), "");
  std::filesystem::remove(probe, ec);
  return dir;
}

template <typename Writer>
std::string render(Writer&& writer) {
  std::ostringstream buf;
  writer(buf);
  return buf.str();
}

inline std::string pair_tag(const ChannelPair& pair) {
  return std::to_string(pair.target + 1) + "_" + std::to_string(pair.source + 1);
}

inline json reduction_json(const VarModel& model, const ReducedRepresentation& red) {
  json out = io::whiteness_to_json(red.error_spectrum);
  out["channels"] = json::array({red.pair.target + 1, red.pair.source + 1});
  // Grid average of the error spectrum in both scalings.
  const Eigen::MatrixXcd mean = mean_scaled_spectrum(red.error_spectrum);
  out["mean_spectrum_2pi_f"] = {{"re", io::matrix_to_json(mean.real())}, {"im", io::matrix_to_json(mean.imag())}};
  const Eigen::MatrixXcd mean_f = mean / (2.0 * std::numbers::pi);
  out["mean_spectrum_f"] = {{"re", io::matrix_to_json(mean_f.real())}, {"im", io::matrix_to_json(mean_f.imag())}};
  out["dim"] = model.dim();
  return out;
}

/// Writes the full set of analysis artifacts for `model` into `dir` and
/// returns the causality report. Returns through `numerical_failure` whether
/// any pair hit a numerical error.
inline CausalityReport write_analysis(const VarModel& model, const RunConfig& cfg, const std::filesystem::path& dir,
                                      std::ostream& out, bool& numerical_failure) {
  const FrequencyGrid grid = make_grid(cfg);
  const auto transfer = transfer_function(model, grid);
  io::write_file((dir / "transfer.csv").string(), render([&](auto& s) { io::write_frequency_csv(s, transfer); }));
  io::write_file((dir / "spectral_density.csv").string(),
                 render([&](auto& s) { io::write_frequency_csv(s, spectral_density(model, grid)); }));
  io::write_file((dir / "dtf.csv").string(),
                 render([&](auto& s) { io::write_dtf_csv(s, dtf_from_transfer(transfer, true)); }));

  const std::size_t d = model.dim();
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      const ChannelPair pair{a, b};
      const std::string tag = pair_tag(pair);
      json marginal_doc;
      try {
        const MarginalAR rep = marginal_representation(model, pair, cfg.q_max, cfg.tol);
        marginal_doc = io::marginal_to_json(rep);
        marginal_doc["innovation_whiteness_deficit"] = innovation_whiteness_check(model, pair, rep, grid);
      } catch (const NotConvergedError& e) {
        numerical_failure = true;
        marginal_doc = io::marginal_to_json(e.best());
        marginal_doc["error"] = e.what();
      } catch (const Error& e) {
        if (!is_numerical(e.code())) throw;
        numerical_failure = true;
        marginal_doc = json{{"channels", json::array({a + 1, b + 1})}, {"error", e.what()}};
      }
      io::write_file((dir / ("marginal_" + tag + ".json")).string(), io::to_json_string(marginal_doc));

      if (d >= 3) {
        const auto red = reduce(model, pair, grid);
        io::write_file((dir / ("reduction_" + tag + "_poly.csv")).string(),
                       render([&](auto& s) { io::write_frequency_csv(s, red.reduced_poly); }));
        io::write_file((dir / ("reduction_" + tag + "_error_spectrum.csv")).string(),
                       render([&](auto& s) { io::write_frequency_csv(s, red.error_spectrum); }));
        io::write_file((dir / ("reduction_" + tag + ".json")).string(), io::to_json_string(reduction_json(model, red)));
      }
    }
  }

  const auto report = full_report(model, grid, cfg.q_max, cfg.tol);
  for (const auto& v : report.pairs) {
    if (v.error) numerical_failure = true;
  }
  io::write_file((dir / "causality.json").string(), io::to_json_string(io::report_to_json(report)));
  io::write_table(out, report);
  return report;
}

/// Applies a JSON run configuration; explicit command-line flags win.
inline void apply_config_file(const std::string& path, RunConfig& cfg, const CLI::App& sub) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, path + ": config must be a JSON object");
  auto unset = [&](const char* flag) { return sub.get_option(flag)->count() == 0; };
  try {
    if (doc.contains("model") && unset("--model") && unset("--builtin")) {
      const auto& m = doc["model"];
      if (m.is_string()) {
        const std::filesystem::path p = m.get<std::string>();
        cfg.source.path = p.is_absolute() ? p.string() : (std::filesystem::path(path).parent_path() / p).string();
      } else if (m.is_object() && m.contains("builtin")) {
        cfg.source.builtin = m.at("builtin").get<std::string>();
        cfg.source.alpha = m.value("alpha", 1.0);
        cfg.source.beta = m.value("beta", 1.0);
      } else {
        throw Error(ErrorCode::ParseError, path + ": field 'model' must be a path or {\"builtin\": ...}");
      }
    }
    if (doc.contains("grid") && unset("--grid")) cfg.grid_count = doc["grid"].get<std::size_t>();
    if (doc.contains("out") && unset("--out")) cfg.out = doc["out"].get<std::string>();
    if (doc.contains("seed") && unset("--seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("q_max") && unset("--qmax")) cfg.q_max = doc["q_max"].get<std::size_t>();
    if (doc.contains("tol") && unset("--tol")) cfg.tol = doc["tol"].get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Directed transfer function, partitioned reduction and exact marginal AR analysis of VAR models",
               "varcause"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string config_path, data_path;
  bool normalized = false;
  std::size_t maxlag = 0, length = 0, order = 0, burn_in = kDefaultBurnIn;

  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--model", cfg.source.path, "VAR model JSON file");
    sub->add_option("--builtin", cfg.source.builtin, "builtin model name (counterexample)");
    sub->add_option("--alpha", cfg.source.alpha, "counterexample weight of X3(t-2) in X1");
    sub->add_option("--beta", cfg.source.beta, "counterexample weight of X3(t-1) in X2");
  };
  auto add_grid = [&](CLI::App* sub) {
    sub->add_option("--grid", cfg.grid_count, "number of equally spaced frequencies on [0, pi]");
    sub->add_option("--freqs-hz", cfg.freqs_hz, "explicit frequencies in Hz (needs --fs)")->delimiter(',');
    sub->add_option("--fs", cfg.fs, "sampling rate in Hz");
  };
  auto add_marginal = [&](CLI::App* sub) {
    sub->add_option("--qmax", cfg.q_max, "maximum marginal AR order");
    sub->add_option("--tol", cfg.tol, "marginal AR convergence tolerance");
  };

  auto* counterexample = app.add_subcommand("counterexample", "run the trivariate counterexample end to end");
  counterexample->add_option("--alpha", cfg.source.alpha, "weight of X3(t-2) in X1");
  counterexample->add_option("--beta", cfg.source.beta, "weight of X3(t-1) in X2");
  counterexample->add_option("--out", cfg.out, "output directory")->required();
  add_grid(counterexample);
  add_marginal(counterexample);

  auto* analyze = app.add_subcommand("analyze", "full causality analysis of a model");
  add_model(analyze);
  add_grid(analyze);
  add_marginal(analyze);
  analyze->add_option("--config", config_path, "JSON run configuration");
  analyze->add_option("--out", cfg.out, "output directory");
  analyze->add_option("--seed", cfg.seed, "random seed (recorded)");

  auto* dtf_cmd = app.add_subcommand("dtf", "directed transfer function as CSV");
  add_model(dtf_cmd);
  add_grid(dtf_cmd);
  dtf_cmd->add_flag("--normalized", normalized, "row-normalize");
  dtf_cmd->add_option("--out", cfg.out, "output CSV file (default stdout)");

  auto* reduce_cmd = app.add_subcommand("reduce", "partitioned bivariate reduction and error spectrum");
  add_model(reduce_cmd);
  add_grid(reduce_cmd);
  reduce_cmd->add_option("--pair", cfg.pair, "retained channels i,j")->required();
  reduce_cmd->add_option("--out", cfg.out, "output directory for CSV spectra");

  auto* marginalize = app.add_subcommand("marginalize", "exact bivariate AR representation of a pair");
  add_model(marginalize);
  add_grid(marginalize);
  add_marginal(marginalize);
  marginalize->add_option("--pair", cfg.pair, "retained channels i,j")->required();
  marginalize->add_option("--out", cfg.out, "output JSON file (default stdout)");

  auto* granger = app.add_subcommand("granger", "DTF and Granger-causality verdicts");
  add_model(granger);
  add_grid(granger);
  add_marginal(granger);
  granger->add_option("--pair", cfg.pair, "restrict to channels i,j (both directions)");
  granger->add_option("--out", cfg.out, "output JSON file");

  auto* moments = app.add_subcommand("moments", "exact autocovariances as CSV");
  add_model(moments);
  moments->add_option("--maxlag", maxlag, "largest lag (default max(2p, 50))");
  moments->add_option("--out", cfg.out, "output CSV file (default stdout)");

  auto* simulate_cmd = app.add_subcommand("simulate", "Gaussian simulation to trajectory CSV");
  add_model(simulate_cmd);
  simulate_cmd->add_option("--length", length, "number of samples")->required();
  simulate_cmd->add_option("--seed", cfg.seed, "random seed");
  simulate_cmd->add_option("--burn-in", burn_in, "discarded warm-up samples");
  simulate_cmd->add_option("--out", cfg.out, "output CSV file")->required();

  auto* fit = app.add_subcommand("fit", "least-squares VAR fit of a trajectory CSV");
  fit->add_option("--data", data_path, "trajectory CSV")->required();
  fit->add_option("--order", order, "VAR order")->required();
  fit->add_option("--pair", cfg.pair, "fit only channels i,j");
  fit->add_option("--maxlag", maxlag, "residual whiteness lags (default 10)");
  fit->add_option("--out", cfg.out, "output JSON file (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error[UsageError]: " << e.what() << "\n";
    return 2;
  }

  auto emit = [&](const std::string& text) {
    if (cfg.out.empty()) {
      out << text;
    } else {
      io::write_file(cfg.out, text);
    }
  };

  try {
    if (counterexample->parsed()) {
      check_finite_weights(cfg.source);
      const VarModel model = counterexample_model(cfg.source.alpha, cfg.source.beta);
      bool failed = false;
      write_analysis(model, cfg, prepare_dir(cfg.out), out, failed);
      return failed ? 1 : 0;
    }
    if (analyze->parsed()) {
      if (!config_path.empty()) apply_config_file(config_path, cfg, *analyze);
      const VarModel model = load(cfg.source);
      bool failed = false;
      const auto dir = prepare_dir(cfg.out);
      io::write_file((dir / "model.json").string(), io::to_json_string(io::model_to_json(model)));
      write_analysis(model, cfg, dir, out, failed);
      return failed ? 1 : 0;
    }
    if (dtf_cmd->parsed()) {
      const VarModel model = load(cfg.source);
      emit(render([&](auto& s) { io::write_dtf_csv(s, dtf(model, make_grid(cfg), normalized)); }));
      return 0;
    }
    if (reduce_cmd->parsed()) {
      const VarModel model = load(cfg.source);
      const ChannelPair pair = parse_pair(cfg.pair, model.dim());
      const auto red = reduce(model, pair, make_grid(cfg));
      const json verdict = reduction_json(model, red);
      if (!cfg.out.empty()) {
        const auto dir = prepare_dir(cfg.out);
        const std::string tag = pair_tag(pair);
        io::write_file((dir / ("reduction_" + tag + "_poly.csv")).string(),
                       render([&](auto& s) { io::write_frequency_csv(s, red.reduced_poly); }));
        io::write_file((dir / ("reduction_" + tag + "_error_spectrum.csv")).string(),
                       render([&](auto& s) { io::write_frequency_csv(s, red.error_spectrum); }));
        io::write_file((dir / ("reduction_" + tag + ".json")).string(), io::to_json_string(verdict));
      }
      out << io::to_json_string(verdict);
      return 0;
    }
    if (marginalize->parsed()) {
      const VarModel model = load(cfg.source);
      const ChannelPair pair = parse_pair(cfg.pair, model.dim());
      const MarginalAR rep = marginal_representation(model, pair, cfg.q_max, cfg.tol);
      json doc = io::marginal_to_json(rep);
      doc["innovation_whiteness_deficit"] = innovation_whiteness_check(model, pair, rep, make_grid(cfg));
      emit(io::to_json_string(doc));
      return 0;
    }
    if (granger->parsed()) {
      const VarModel model = load(cfg.source);
      CausalityReport report = full_report(model, make_grid(cfg), cfg.q_max, cfg.tol);
      if (!cfg.pair.empty()) {
        const ChannelPair pair = parse_pair(cfg.pair, model.dim());
        std::erase_if(report.pairs, [&](const PairVerdict& v) {
          return !((v.pair.target == pair.target && v.pair.source == pair.source) ||
                   (v.pair.target == pair.source && v.pair.source == pair.target));
        });
      }
      io::write_table(out, report);
      if (!cfg.out.empty()) io::write_file(cfg.out, io::to_json_string(io::report_to_json(report)));
      for (const auto& v : report.pairs)
        if (v.error) return 1;
      return 0;
    }
    if (moments->parsed()) {
      const VarModel model = load(cfg.source);
      const auto seq = maxlag == 0 ? autocov(model) : autocov(model, maxlag);
      emit(render([&](auto& s) { io::write_autocov_csv(s, seq); }));
      return 0;
    }
    if (simulate_cmd->parsed()) {
      const VarModel model = load(cfg.source);
      const auto traj = simulate(model, length, cfg.seed, burn_in);
      io::write_file(cfg.out, render([&](auto& s) { io::write_trajectory_csv(s, traj); }));
      return 0;
    }
    if (fit->parsed()) {
      std::istringstream in(io::read_file(data_path));
      Trajectory traj = io::read_trajectory_csv(in);
      if (!cfg.pair.empty()) {
        const ChannelPair pair = parse_pair(cfg.pair, traj.dim());
        traj = traj.select({pair.target, pair.source});
      }
      const auto result = fit_var(traj, order, maxlag == 0 ? kDefaultResidualLags : maxlag);
      json se = json::array();
      for (const auto& m : result.std_errors) se.push_back(io::matrix_to_json(m));
      json doc{{"model", io::model_to_json(result.model)},
               {"std_errors", se},
               {"observations", result.residuals.rows()},
               {"residual_whiteness",
                {{"lag_norms", result.whiteness.lag_norms},
                 {"portmanteau", result.whiteness.portmanteau},
                 {"dof", result.whiteness.dof},
                 {"bound", result.whiteness.bound},
                 {"white", result.whiteness.white}}}};
      emit(io::to_json_string(doc));
      return 0;
    }
  } catch (const Error& e) {
    err << "error[" << to_string(e.code()) << "]: " << e.message() << "\n";
    return is_numerical(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error[Internal]: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace varcause::cli
