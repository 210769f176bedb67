/// @file cli.hpp
/// @brief Command-line front end: run configuration (flags over a flat
///        key=value config file), the three experiment modes — convergence,
///        decay, simulate — and deterministic CSV/JSON reports with
///        machine-readable error records.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "savmhd/errors.hpp"
#include "savmhd/harness.hpp"
#include "savmhd/manufactured.hpp"
#include "savmhd/stepper.hpp"

namespace savmhd {

enum class RunMode { Convergence, Decay, Simulate };
enum class OutputFormat { Csv, Json };

/// One fully validated run request. Step sizes live in `dts`: several for a
/// convergence ladder, exactly one for decay/simulate.
struct RunConfig {
  RunMode mode = RunMode::Convergence;
  int scheme = 1;
  int n = 256;
  std::vector<double> dts;
  double t_final = 1.0;  ///< decay/simulate horizon; convergence runs to params.T
  Params params{};
  double k = 0.01;                ///< manufactured-solution amplitude
  unsigned long long seed = 0;    ///< 0 → manufactured initial state; else random
  std::string output;             ///< report path; empty → standard output
  OutputFormat format = OutputFormat::Csv;
};

/// Parse one step size: a decimal ("0.25") or a fraction ("1/64").
inline double parse_dt_token(const std::string& tok) {
  auto bad = [&] { throw ConfigError("invalid step size '" + tok + "'"); };
  auto number = [&](const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      bad();
    }
    if (pos != s.size() || !std::isfinite(v)) bad();
    return v;
  };
  double v = 0.0;
  const std::size_t slash = tok.find('/');
  if (slash == std::string::npos) {
    v = number(tok);
  } else {
    if (tok.find('/', slash + 1) != std::string::npos) bad();
    const double num = number(tok.substr(0, slash));
    const double den = number(tok.substr(slash + 1));
    if (den == 0.0) bad();
    v = num / den;
  }
  if (!(v > 0.0) || !std::isfinite(v)) bad();
  return v;
}

/// Parse a halving ladder "a:b" into {a, a/2, …, b}; b must equal a/2^m.
inline std::vector<double> parse_dt_ladder(const std::string& text) {
  const std::size_t colon = text.find(':');
  if (colon == std::string::npos || text.find(':', colon + 1) != std::string::npos)
    throw ConfigError("dt ladder must be 'largest:smallest', got '" + text + "'");
  const double a = parse_dt_token(text.substr(0, colon));
  const double b = parse_dt_token(text.substr(colon + 1));
  if (!(a > b))
    throw ConfigError("dt ladder '" + text + "' must decrease (largest first)");
  const long m = std::lround(std::log2(a / b));
  if (m < 1 || m > 60)
    throw ConfigError("dt ladder '" + text + "' must halve from a down to b = a/2^m");
  std::vector<double> out{a};
  for (long i = 1; i <= m; ++i) out.push_back(out.back() / 2.0);
  if (std::abs(out.back() - b) > 1e-9 * b)
    throw ConfigError("dt ladder '" + text + "' must halve from a down to b = a/2^m");
  return out;
}

/// Parse flags (and an optional --config key=value file; flags win) into a
/// validated RunConfig. `args` excludes the program name. Returns nullopt
/// when help was requested, with the help text written to *help. Every
/// rejection — unknown key, bad value, inconsistent combination — throws
/// ConfigError naming the offending input.
inline std::optional<RunConfig> parse_config(std::vector<std::string> args,
                                             std::string* help = nullptr) {
  RunConfig cfg;
  std::string mode_str = "convergence";
  std::string format_str = "csv";
  std::string dt_str;
  std::string ladder_str;

  CLI::App app{"Energy-stable incompressible MHD experiments: temporal "
               "convergence studies, zero-forcing decay traces, and single "
               "forced simulations."};
  app.name("savmhd");
  app.add_option("--mode", mode_str, "convergence | decay | simulate")
      ->check(CLI::IsMember({"convergence", "decay", "simulate"}));
  app.add_option("--scheme", cfg.scheme, "time integrator: 1 (first order) or 2 (BDF2)")
      ->check(CLI::IsMember({1, 2}));
  app.add_option("--n", cfg.n, "grid cells per side")->check(CLI::Range(4, 8192));
  CLI::Option* dt_opt =
      app.add_option("--dt", dt_str, "single step size (decimal or fraction like 1/64)");
  CLI::Option* ladder_opt = app.add_option(
      "--dt-ladder", ladder_str,
      "halving ladder 'a:b' for convergence mode (default 1/2:1/64)");
  app.add_option("--t-final", cfg.t_final,
                 "end time for decay/simulate (steps = round(t-final/dt)); "
                 "convergence always runs to T")
      ->check(CLI::PositiveNumber);
  app.add_option("--nu", cfg.params.nu, "kinematic viscosity")->check(CLI::PositiveNumber);
  app.add_option("--eta", cfg.params.eta, "magnetic diffusivity")->check(CLI::PositiveNumber);
  app.add_option("--alpha", cfg.params.alpha, "velocity-magnetic coupling")
      ->check(CLI::PositiveNumber);
  app.add_option("--T", cfg.params.T, "auxiliary-variable relaxation time")
      ->check(CLI::PositiveNumber);
  app.add_option("--k", cfg.k, "manufactured-solution amplitude")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed,
                 "initial state for decay/simulate: 0 = manufactured, else random");
  app.add_option("--output", cfg.output, "report file path (default: standard output)");
  app.add_option("--format", format_str, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.set_config("--config", "", "flat key=value configuration file; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    if (help) *help = app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  cfg.mode = mode_str == "convergence" ? RunMode::Convergence
             : mode_str == "decay"     ? RunMode::Decay
                                       : RunMode::Simulate;
  cfg.format = format_str == "csv" ? OutputFormat::Csv : OutputFormat::Json;
  cfg.params.validate();

  const bool has_dt = dt_opt->count() > 0;
  const bool has_ladder = ladder_opt->count() > 0;
  if (has_dt && has_ladder)
    throw ConfigError("give either --dt or --dt-ladder, not both");

  if (cfg.mode == RunMode::Convergence) {
    if (has_ladder)
      cfg.dts = parse_dt_ladder(ladder_str);
    else if (has_dt)
      cfg.dts = {parse_dt_token(dt_str)};
    else
      cfg.dts = parse_dt_ladder("1/2:1/64");
    for (double dt : cfg.dts)
      if (std::lround(cfg.params.T / dt) < 1)
        throw ConfigError("step size " + std::to_string(dt) +
                          " exceeds the convergence end time T = " +
                          std::to_string(cfg.params.T));
  } else {
    if (has_ladder)
      throw ConfigError("--dt-ladder applies only to convergence mode");
    if (!has_dt)
      throw ConfigError("--dt is required for decay and simulate modes");
    cfg.dts = {parse_dt_token(dt_str)};
    const long steps = std::lround(cfg.t_final / cfg.dts.front());
    if (steps < 1)
      throw ConfigError("t-final = " + std::to_string(cfg.t_final) +
                        " is under half a step of size " + dt_str);
    if (steps > 10'000'000)
      throw ConfigError("t-final/dt requests over 10^7 steps; refusing");
  }
  return cfg;
}

/// Row-parallelism cap for convergence studies, from SAV_MHD_THREADS
/// (default 1). Reports are byte-identical for every value.
inline int threads_from_env() {
  const char* v = std::getenv("SAV_MHD_THREADS");
  if (v == nullptr || *v == '\0') return 1;
  char* end = nullptr;
  const long t = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || t < 1 || t > 1024)
    throw ConfigError("SAV_MHD_THREADS must be a positive integer, got '" +
                      std::string(v) + "'");
  return static_cast<int>(t);
}

namespace cli_detail {

/// Fixed-width scientific form: the one float format every report uses, so
/// identical runs produce identical bytes.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline nlohmann::ordered_json params_json(const RunConfig& cfg) {
  return {{"nu", cfg.params.nu},
          {"eta", cfg.params.eta},
          {"alpha", cfg.params.alpha},
          {"T", cfg.params.T},
          {"k", cfg.k}};
}

inline nlohmann::ordered_json error_json(const std::string& type,
                                         const std::string& message) {
  return {{"type", type}, {"message", message}};
}

inline const RowError* find_row_error(const std::vector<RowError>& errs,
                                      std::size_t index) {
  for (const RowError& e : errs)
    if (e.index == index) return &e;
  return nullptr;
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& rep,
                                  const std::vector<RowError>& errs) {
  os << "dt,err_u_l2,err_u_h1,err_p_l2,err_b_l2,err_b_h1,"
        "order_u_l2,order_u_h1,order_p_l2,order_b_l2,order_b_h1\n";
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const ConvergenceRow& row = rep.rows[i];
    if (row.failed) {
      const RowError* e = find_row_error(errs, i);
      os << "#error," << fmt(row.dt) << ',' << (e ? e->type : "error") << ','
         << csv_quote(e ? e->message : "") << "\n";
      continue;
    }
    os << fmt(row.dt);
    for (int c = 0; c < kErrCount; ++c) os << ',' << fmt(row.err[std::size_t(c)]);
    for (int c = 0; c < kErrCount; ++c)
      os << ',' << (i == 0 ? std::string() : fmt(rep.pair_order[i - 1][std::size_t(c)]));
    os << "\n";
  }
  for (const ConvergenceRow& row : rep.rows) {
    bool any = false;
    for (int c = 0; c < kErrCount; ++c) any = any || row.flagged[std::size_t(c)];
    if (!any) continue;
    os << "#flagged," << fmt(row.dt);
    for (int c = 0; c < kErrCount; ++c)
      if (row.flagged[std::size_t(c)]) os << ',' << err_column_name(c);
    os << "\n";
  }
  if (const RowError* e = find_row_error(errs, rep.rows.size()))
    os << "#error,floor," << e->type << ',' << csv_quote(e->message) << "\n";
  os << "#floor_estimate";
  for (int c = 0; c < kErrCount; ++c) os << ',' << fmt(rep.floor_estimate[std::size_t(c)]);
  os << "\n#fitted_order";
  for (int c = 0; c < kErrCount; ++c) os << ',' << fmt(rep.fitted_order[std::size_t(c)]);
  os << "\n#q_order," << fmt(rep.q_order) << "\n";
}

inline void write_convergence_json(std::ostream& os, const RunConfig& cfg,
                                   const ConvergenceReport& rep,
                                   const std::vector<RowError>& errs) {
  nlohmann::ordered_json j;
  j["mode"] = "convergence";
  j["scheme"] = rep.scheme;
  j["n"] = rep.n;
  j["params"] = params_json(cfg);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const ConvergenceRow& row = rep.rows[i];
    nlohmann::ordered_json r;
    r["dt"] = row.dt;
    if (row.failed) {
      const RowError* e = find_row_error(errs, i);
      r["error"] = error_json(e ? e->type : "error", e ? e->message : "");
    } else {
      nlohmann::ordered_json err, flagged = nlohmann::ordered_json::array();
      for (int c = 0; c < kErrCount; ++c) {
        err[err_column_name(c)] = row.err[std::size_t(c)];
        if (row.flagged[std::size_t(c)]) flagged.push_back(err_column_name(c));
      }
      r["err"] = err;
      if (i == 0) {
        r["pair_order"] = nullptr;
      } else {
        nlohmann::ordered_json po;
        for (int c = 0; c < kErrCount; ++c)
          po[err_column_name(c)] = rep.pair_order[i - 1][std::size_t(c)];
        r["pair_order"] = po;
      }
      r["q_err_max"] = row.q_err_max;
      r["flagged"] = flagged;
    }
    rows.push_back(r);
  }
  j["rows"] = rows;
  if (const RowError* e = find_row_error(errs, rep.rows.size()))
    j["floor_error"] = error_json(e->type, e->message);
  nlohmann::ordered_json floors, fits;
  for (int c = 0; c < kErrCount; ++c) {
    floors[err_column_name(c)] = rep.floor_estimate[std::size_t(c)];
    fits[err_column_name(c)] = rep.fitted_order[std::size_t(c)];
  }
  j["floor_estimate"] = floors;
  j["fitted_order"] = fits;
  j["q_order"] = rep.q_order;
  os << j.dump(2) << "\n";
}

inline int convergence_mode(const RunConfig& cfg, std::ostream& os) {
  std::vector<RowError> errs;
  const ConvergenceReport rep = run_convergence(
      ManufacturedCase{cfg.params, cfg.k}, cfg.scheme, cfg.n, cfg.dts,
      threads_from_env(), &errs);
  if (cfg.format == OutputFormat::Csv)
    write_convergence_csv(os, rep, errs);
  else
    write_convergence_json(os, cfg, rep, errs);
  return errs.empty() ? 0 : 1;
}

inline void write_decay_csv(std::ostream& os, const DecayTrace& tr) {
  os << "step,t,energy,dissipation,gap\n";
  for (const DecayRow& row : tr.rows) {
    os << row.step << ',' << fmt(row.t) << ','
       << (row.has_energy ? fmt(row.energy) : std::string()) << ','
       << (row.step >= 1 ? fmt(row.dissipation) : std::string()) << ','
       << (row.has_gap ? fmt(row.gap) : std::string()) << "\n";
  }
  os << "#min_gap," << fmt(tr.min_gap) << "\n";
  os << "#max_energy_rise," << fmt(tr.max_energy_rise) << "\n";
}

inline void write_decay_json(std::ostream& os, const RunConfig& cfg,
                             const DecayTrace& tr, long steps) {
  nlohmann::ordered_json j;
  j["mode"] = "decay";
  j["scheme"] = tr.scheme;
  j["n"] = cfg.n;
  j["dt"] = cfg.dts.front();
  j["steps"] = steps;
  j["seed"] = cfg.seed;
  j["params"] = params_json(cfg);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const DecayRow& row : tr.rows) {
    nlohmann::ordered_json r;
    r["step"] = row.step;
    r["t"] = row.t;
    r["energy"] = row.has_energy ? nlohmann::ordered_json(row.energy)
                                 : nlohmann::ordered_json(nullptr);
    r["dissipation"] = row.step >= 1 ? nlohmann::ordered_json(row.dissipation)
                                     : nlohmann::ordered_json(nullptr);
    r["gap"] = row.has_gap ? nlohmann::ordered_json(row.gap)
                           : nlohmann::ordered_json(nullptr);
    rows.push_back(r);
  }
  j["rows"] = rows;
  j["min_gap"] = tr.min_gap;
  j["max_energy_rise"] = tr.max_energy_rise;
  os << j.dump(2) << "\n";
}

inline int decay_mode(const RunConfig& cfg, std::ostream& os) {
  const StaggeredGrid g(cfg.n);
  const ManufacturedCase mc{cfg.params, cfg.k};
  const double dt = cfg.dts.front();
  const long steps = std::lround(cfg.t_final / dt);
  const State initial =
      cfg.seed == 0 ? mc.exact_state(g, 0.0) : random_admissible_state(g, cfg.seed);
  try {
    const DecayTrace tr =
        run_decay(g, cfg.params, cfg.scheme, dt, static_cast<int>(steps), initial);
    if (cfg.format == OutputFormat::Csv)
      write_decay_csv(os, tr);
    else
      write_decay_json(os, cfg, tr, steps);
    return 0;
  } catch (const NumericalError& e) {
    if (cfg.format == OutputFormat::Csv) {
      os << "step,t,energy,dissipation,gap\n";
      os << "#error," << error_type_name(e) << ',' << csv_quote(e.what()) << "\n";
    } else {
      nlohmann::ordered_json j;
      j["mode"] = "decay";
      j["scheme"] = cfg.scheme;
      j["n"] = cfg.n;
      j["dt"] = dt;
      j["error"] = error_json(error_type_name(e), e.what());
      os << j.dump(2) << "\n";
    }
    return 1;
  }
}

/// Advance the manufactured-forced problem from the seed-selected initial
/// state with uniform steps (same forcing-time convention as the
/// convergence driver: the right-hand side is evaluated at the new time).
inline State run_simulate(const RunConfig& cfg, const StaggeredGrid& g,
                          const ManufacturedCase& mc, long steps) {
  const Params& pr = cfg.params;
  const double dt = cfg.dts.front();
  State cur =
      cfg.seed == 0 ? mc.exact_state(g, 0.0) : random_admissible_state(g, cfg.seed);
  cur.step = 0;
  State prev;
  long first = 1;
  if (cfg.scheme == 2) {
    const SchemeOperators boot(g, pr, dt, 1);
    const auto f = mc.forcing(g, dt);
    prev = cur;
    cur = step_first_order(cur, pr, dt, boot, {&f.first, &f.second});
    first = 2;
  }
  if (cfg.scheme == 1) {
    const SchemeOperators ops(g, pr, dt, 1);
    for (long s = first; s <= steps; ++s) {
      const auto f = mc.forcing(g, double(s) * dt);
      cur = step_first_order(cur, pr, dt, ops, {&f.first, &f.second});
    }
  } else if (steps >= 2) {
    const SchemeOperators ops(g, pr, dt, 2);
    for (long s = first; s <= steps; ++s) {
      const auto f = mc.forcing(g, double(s) * dt);
      State next = step_second_order(cur, prev, pr, dt, ops, {&f.first, &f.second});
      prev = std::move(cur);
      cur = std::move(next);
    }
  }
  return cur;
}

inline void write_simulate_csv(std::ostream& os, const StaggeredGrid& g,
                               const State& s) {
  os << "field,x,y,value\n";
  const int n = g.n();
  auto dump_x = [&](const char* name, const Eigen::ArrayXXd& a) {
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j < n; ++j)
        os << name << ',' << fmt(g.face_coord(i)) << ',' << fmt(g.center_coord(j))
           << ',' << fmt(a(i, j)) << "\n";
  };
  auto dump_y = [&](const char* name, const Eigen::ArrayXXd& a) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= n; ++j)
        os << name << ',' << fmt(g.center_coord(i)) << ',' << fmt(g.face_coord(j))
           << ',' << fmt(a(i, j)) << "\n";
  };
  dump_x("u1", s.u.x);
  dump_y("u2", s.u.y);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      os << "p," << fmt(g.center_coord(i)) << ',' << fmt(g.center_coord(j)) << ','
         << fmt(s.p.a(i, j)) << "\n";
  dump_x("b1", s.b.x);
  dump_y("b2", s.b.y);
  os << "q," << fmt(0.0) << ',' << fmt(0.0) << ',' << fmt(s.q) << "\n";
}

inline void write_simulate_json(std::ostream& os, const RunConfig& cfg,
                                const StaggeredGrid& g, const State& s,
                                long steps) {
  nlohmann::ordered_json j;
  j["mode"] = "simulate";
  j["scheme"] = cfg.scheme;
  j["n"] = cfg.n;
  j["dt"] = cfg.dts.front();
  j["steps"] = steps;
  j["t_final"] = double(steps) * cfg.dts.front();
  j["seed"] = cfg.seed;
  j["params"] = params_json(cfg);
  j["q"] = s.q;
  const int n = g.n();
  auto triples_x = [&](const Eigen::ArrayXXd& a) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j < n; ++j)
        rows.push_back({g.face_coord(i), g.center_coord(j), a(i, j)});
    return rows;
  };
  auto triples_y = [&](const Eigen::ArrayXXd& a) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= n; ++j)
        rows.push_back({g.center_coord(i), g.face_coord(j), a(i, j)});
    return rows;
  };
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cells.push_back({g.center_coord(i), g.center_coord(j), s.p.a(i, j)});
  j["fields"] = {{"u1", triples_x(s.u.x)},
                 {"u2", triples_y(s.u.y)},
                 {"p", cells},
                 {"b1", triples_x(s.b.x)},
                 {"b2", triples_y(s.b.y)}};
  os << j.dump() << "\n";
}

inline int simulate_mode(const RunConfig& cfg, std::ostream& os) {
  const StaggeredGrid g(cfg.n);
  const ManufacturedCase mc{cfg.params, cfg.k};
  const long steps = std::lround(cfg.t_final / cfg.dts.front());
  try {
    const State final_state = run_simulate(cfg, g, mc, steps);
    if (cfg.format == OutputFormat::Csv)
      write_simulate_csv(os, g, final_state);
    else
      write_simulate_json(os, cfg, g, final_state, steps);
    return 0;
  } catch (const NumericalError& e) {
    if (cfg.format == OutputFormat::Csv) {
      os << "field,x,y,value\n";
      os << "#error," << error_type_name(e) << ',' << csv_quote(e.what()) << "\n";
    } else {
      nlohmann::ordered_json j;
      j["mode"] = "simulate";
      j["scheme"] = cfg.scheme;
      j["n"] = cfg.n;
      j["dt"] = cfg.dts.front();
      j["error"] = error_json(error_type_name(e), e.what());
      os << j.dump(2) << "\n";
    }
    return 1;
  }
}

}  // namespace cli_detail

/// Run one validated config. Writes the report to cfg.output (or to
/// `default_out` when no path was given) and returns the exit code: 0 on
/// success, 1 when a numerical failure was recorded in the report.
inline int execute(const RunConfig& cfg, std::ostream& default_out) {
  std::ofstream file;
  std::ostream* os = &default_out;
  if (!cfg.output.empty()) {
    file.open(cfg.output, std::ios::binary);
    if (!file)
      throw ConfigError("cannot open output file '" + cfg.output + "'");
    os = &file;
  }
  int code = 0;
  switch (cfg.mode) {
    case RunMode::Convergence:
      code = cli_detail::convergence_mode(cfg, *os);
      break;
    case RunMode::Decay:
      code = cli_detail::decay_mode(cfg, *os);
      break;
    case RunMode::Simulate:
      code = cli_detail::simulate_mode(cfg, *os);
      break;
  }
  os->flush();
  if (!*os)
    throw std::runtime_error("failed writing output" +
                             (cfg.output.empty() ? std::string()
                                                 : " file '" + cfg.output + "'"));
  return code;
}

/// Full front end: parse args (program name excluded), run, map errors to
/// the exit-code contract (0 success, 1 numerical failure, 2 config error).
inline int run_cli(std::vector<std::string> args, std::ostream& out,
                   std::ostream& err) {
  try {
    std::string help;
    const std::optional<RunConfig> cfg = parse_config(std::move(args), &help);
    if (!cfg) {
      out << help;
      return 0;
    }
    return execute(*cfg, out);
  } catch (const std::exception& e) {
    err << error_type_name(e) << ": " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace savmhd
