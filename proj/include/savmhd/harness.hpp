/// @file harness.hpp
/// @brief Verification drivers: manufactured-solution convergence studies
///        and unconditional-stability (decay) traces.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "savmhd/errors.hpp"
#include "savmhd/manufactured.hpp"
#include "savmhd/stepper.hpp"

namespace savmhd {

/// Energy gaps may go negative only by round-off; anything below this is a
/// stability violation.
inline constexpr double kGapTolerance = 1e-9;

/// Error columns of a convergence study, in report order.
enum ErrColumn : int { kErrUL2 = 0, kErrUH1, kErrPL2, kErrBL2, kErrBH1, kErrCount };

inline const char* err_column_name(int c) {
  static const char* names[kErrCount] = {"u_l2", "u_h1", "p_l2", "b_l2", "b_h1"};
  return names[c];
}

struct ConvergenceRow {
  double dt = 0.0;
  std::array<double, kErrCount> err{};  ///< errors at the final time
  double q_err_max = 0.0;               ///< max over steps of |qⁿ - exp(-tⁿ/T)|
  std::array<bool, kErrCount> flagged{};  ///< temporal error under the spatial floor
  bool failed = false;  ///< the run threw; details in the RowError sink
};

/// Machine-readable record of one failed convergence row. `index` is the
/// row's position in the step-size list; `index == dts.size()` marks the
/// half-resolution floor-estimate run.
struct RowError {
  std::size_t index = 0;
  double dt = 0.0;
  std::string type;     ///< stable tag from error_type_name()
  std::string message;
};

struct ConvergenceReport {
  int n = 0;
  int scheme = 1;
  std::vector<ConvergenceRow> rows;                  ///< one per dt, input order
  std::vector<std::array<double, kErrCount>> pair_order;  ///< rows-1 entries
  std::array<double, kErrCount> floor_estimate{};    ///< spatial error floor at n
  std::array<double, kErrCount> fitted_order{};      ///< LSQ over unflagged rows
  double q_order = std::numeric_limits<double>::quiet_NaN();
};

/// Final state and q-trajectory error of one manufactured run to t = 1.
struct ManufacturedRun {
  State final_state;
  double q_err_max = 0.0;
  double t_final = 0.0;
};

/// Advance the manufactured problem from t = 0 to t ≈ T with uniform steps
/// (T doubles as the final time of the exact-solution experiment). scheme 2
/// bootstraps its first step with the first-order scheme (its own factored
/// operators live only for that step).
inline ManufacturedRun run_manufactured(const ManufacturedCase& mc, int scheme,
                                        const StaggeredGrid& g, double dt) {
  if (scheme != 1 && scheme != 2)
    throw std::invalid_argument("run_manufactured: scheme must be 1 or 2");
  const long steps = std::lround(mc.params.T / dt);
  detail::require(steps >= 1, "run_manufactured: dt must not exceed the end time T");
  const Params& pr = mc.params;

  ManufacturedRun out;
  State prev;                 // state n-1 (scheme 2 only)
  State cur = mc.exact_state(g, 0.0);
  cur.step = 0;
  double q_err = 0.0;

  auto track_q = [&](const State& s) {
    q_err = std::max(q_err, std::abs(s.q - mc.q(s.step * dt)));
  };

  long first_bdf2 = 1;
  if (scheme == 2) {
    // Bootstrap step with the first-order scheme, then free its factors.
    SchemeOperators boot(g, pr, dt, 1);
    auto [fu, fb] = mc.forcing(g, 1.0 * dt);
    Forcing force{&fu, &fb};
    prev = cur;
    cur = step_first_order(cur, pr, dt, boot, force);
    track_q(cur);
    first_bdf2 = 2;
    if (steps == 1) {
      out.final_state = cur;
      out.q_err_max = q_err;
      out.t_final = steps * dt;
      return out;
    }
  }

  SchemeOperators ops(g, pr, dt, scheme);
  for (long n = first_bdf2 - 1; n < steps; ++n) {
    const double t_next = (n + 1) * dt;
    auto [fu, fb] = mc.forcing(g, t_next);
    Forcing force{&fu, &fb};
    if (scheme == 1) {
      cur = step_first_order(cur, pr, dt, ops, force);
    } else {
      State next = step_second_order(cur, prev, pr, dt, ops, force);
      prev = std::move(cur);
      cur = std::move(next);
    }
    track_q(cur);
  }
  out.final_state = std::move(cur);
  out.q_err_max = q_err;
  out.t_final = steps * dt;
  return out;
}

namespace detail {

inline std::array<double, kErrCount> measure_errors(const ManufacturedCase& mc,
                                                    const StaggeredGrid& g,
                                                    const ManufacturedRun& run) {
  const State exact = mc.exact_state(g, run.t_final);
  const VectorField du = lincomb(1.0, run.final_state.u, -1.0, exact.u);
  const ScalarField dp = lincomb(1.0, run.final_state.p, -1.0, exact.p);
  const VectorField db = lincomb(1.0, run.final_state.b, -1.0, exact.b);
  const Norms nu_ = norms(g, du);
  const Norms np_ = norms(g, dp);
  const Norms nb_ = norms(g, db);
  std::array<double, kErrCount> e{};
  e[kErrUL2] = nu_.l2;
  e[kErrUH1] = nu_.h1();
  e[kErrPL2] = np_.l2;
  e[kErrBL2] = nb_.l2;
  e[kErrBH1] = nb_.h1();
  return e;
}

/// Least-squares slope of log(err) against log(dt) over the selected rows.
inline double fit_order(const std::vector<double>& dts, const std::vector<double>& errs) {
  const size_t m = dts.size();
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < m; ++i) {
    const double x = std::log(dts[i]), y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = m * sxx - sx * sx;
  return (m * sxy - sx * sy) / denom;
}

}  // namespace detail

/// Temporal convergence study on an n×n grid over the given step sizes
/// (descending). Each run integrates to t = 1 and measures errors against
/// the exact solution. A companion run at half resolution and the smallest
/// dt estimates the spatial error floor; rows whose error sits within 10×
/// the floor are flagged per column and excluded from the fitted orders.
///
/// Rows are independent, so up to `threads` of them run concurrently; the
/// report is assembled in input order afterwards and is identical for every
/// thread count. With a `row_errors` sink a failing row is recorded there
/// and marked `failed` instead of aborting the study (failed rows are
/// excluded from the floor, the pair orders, and the fits); without a sink
/// the first failure propagates.
inline ConvergenceReport run_convergence(const ManufacturedCase& mc, int scheme, int n,
                                         const std::vector<double>& dts, int threads = 1,
                                         std::vector<RowError>* row_errors = nullptr) {
  detail::require(!dts.empty(), "run_convergence: need at least one step size");
  detail::require(threads >= 1, "run_convergence: thread count must be positive");
  const StaggeredGrid g(n);
  ConvergenceReport rep;
  rep.n = n;
  rep.scheme = scheme;
  const std::size_t nrows = dts.size();

  std::vector<ConvergenceRow> rows(nrows);
  std::vector<std::exception_ptr> row_exc(nrows);
  auto compute_row = [&](std::size_t i) {
    rows[i].dt = dts[i];
    try {
      const ManufacturedRun run = run_manufactured(mc, scheme, g, dts[i]);
      rows[i].err = detail::measure_errors(mc, g, run);
      rows[i].q_err_max = run.q_err_max;
    } catch (...) {
      rows[i].failed = true;
      row_exc[i] = std::current_exception();
    }
  };

  const std::size_t nworkers = std::min<std::size_t>(std::size_t(threads), nrows);
  if (nworkers <= 1) {
    for (std::size_t i = 0; i < nrows; ++i) compute_row(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nworkers);
    for (std::size_t w = 0; w < nworkers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < nrows; i = next.fetch_add(1))
          compute_row(i);
      });
    for (std::thread& t : pool) t.join();
  }

  for (std::size_t i = 0; i < nrows; ++i) {
    if (!row_exc[i]) continue;
    if (!row_errors) std::rethrow_exception(row_exc[i]);
    try {
      std::rethrow_exception(row_exc[i]);
    } catch (const std::exception& e) {
      row_errors->push_back({i, dts[i], error_type_name(e), e.what()});
    } catch (...) {
      row_errors->push_back({i, dts[i], "error", "unknown exception"});
    }
  }
  rep.rows = std::move(rows);

  // Spatial floor: err(n/2, dt_min) - err(n, dt_min) ≈ 3·C·h², so a third of
  // the difference estimates the O(h²) floor at resolution n.
  const double dt_min = *std::min_element(dts.begin(), dts.end());
  std::size_t i_min = 0;
  for (std::size_t i = 0; i < nrows; ++i)
    if (dts[i] == dt_min) i_min = i;
  if (n % 2 == 0 && n / 2 >= StaggeredGrid::kMinCells && !rep.rows[i_min].failed) {
    try {
      const StaggeredGrid gh(n / 2);
      const ManufacturedRun half = run_manufactured(mc, scheme, gh, dt_min);
      const std::array<double, kErrCount> err_half = detail::measure_errors(mc, gh, half);
      for (int c = 0; c < kErrCount; ++c)
        rep.floor_estimate[c] =
            std::max(0.0, (err_half[c] - rep.rows[i_min].err[c]) / 3.0);
      for (ConvergenceRow& row : rep.rows)
        if (!row.failed)
          for (int c = 0; c < kErrCount; ++c)
            row.flagged[c] = row.err[c] < 10.0 * rep.floor_estimate[c];
    } catch (const std::exception& e) {
      if (!row_errors) throw;
      row_errors->push_back({nrows, dt_min, error_type_name(e), e.what()});
    }
  }

  const auto nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
    std::array<double, kErrCount> po{};
    for (int c = 0; c < kErrCount; ++c)
      po[c] = (rep.rows[i].failed || rep.rows[i + 1].failed)
                  ? nan
                  : std::log(rep.rows[i].err[c] / rep.rows[i + 1].err[c]) /
                        std::log(rep.rows[i].dt / rep.rows[i + 1].dt);
    rep.pair_order.push_back(po);
  }

  for (int c = 0; c < kErrCount; ++c) {
    std::vector<double> xs, ys;
    for (const ConvergenceRow& row : rep.rows)
      if (!row.failed && !row.flagged[c] && row.err[c] > 0.0) {
        xs.push_back(row.dt);
        ys.push_back(row.err[c]);
      }
    rep.fitted_order[c] = detail::fit_order(xs, ys);
  }
  {
    std::vector<double> xs, ys;
    for (const ConvergenceRow& row : rep.rows)
      if (!row.failed && row.q_err_max > 0.0) {
        xs.push_back(row.dt);
        ys.push_back(row.q_err_max);
      }
    rep.q_order = detail::fit_order(xs, ys);
  }
  return rep;
}

/// One row of a decay (zero-forcing) trace. Undefined entries (for example
/// the gap of the first rows) carry has_* = false.
struct DecayRow {
  int step = 0;
  double t = 0.0;
  double energy = 0.0;       ///< scheme 1: plain energy; scheme 2: modified
  double dissipation = 0.0;
  double gap = 0.0;          ///< E_prev - E_cur - dissipation (≥ -1e-9)
  bool has_energy = true;
  bool has_gap = false;
};

struct DecayTrace {
  int scheme = 1;
  std::vector<DecayRow> rows;
  double min_gap = std::numeric_limits<double>::infinity();
  double max_energy_rise = 0.0;  ///< max over steps of E_cur - E_prev
};

/// Run `steps` zero-forcing steps from the given initial state, recording
/// the scheme's certified energy, the dissipation, and the gap
///   gap = E_prev - E_cur - dissipation,
/// which the energy identity makes a sum of squares. Throws
/// StabilityViolation if any gap (including the scheme-2 bootstrap step's
/// plain-energy gap) falls below -1e-9.
///
/// Scheme 2 rows: row 0 has no certified energy (the modified energy needs
/// two states); row 1 records the modified energy without a gap; gaps start
/// at row 2. The bootstrap step's plain-energy gap is asserted internally.
inline DecayTrace run_decay(const StaggeredGrid& g, const Params& pr, int scheme,
                            double dt, int steps, const State& initial) {
  pr.validate();
  if (scheme != 1 && scheme != 2)
    throw std::invalid_argument("run_decay: scheme must be 1 or 2");
  detail::require(steps >= 1, "run_decay: need at least one step");
  detail::check_shape(g, initial.p, "run_decay: state/grid mismatch");

  DecayTrace trace;
  trace.scheme = scheme;

  auto check_gap = [&](double gap, int step) {
    trace.min_gap = std::min(trace.min_gap, gap);
    if (!(gap >= -kGapTolerance))
      throw StabilityViolation("energy gap " + std::to_string(gap) + " at step " +
                               std::to_string(step) + " violates the energy law");
  };

  State cur = initial;
  cur.step = 0;

  if (scheme == 1) {
    double e_prev = energy(g, cur, pr);
    trace.rows.push_back({0, 0.0, e_prev, 0.0, 0.0, true, false});
    SchemeOperators ops(g, pr, dt, 1);
    for (int nstep = 1; nstep <= steps; ++nstep) {
      StepReport rp;
      cur = step_first_order(cur, pr, dt, ops, {}, &rp);
      const double gap = e_prev - rp.energy - rp.dissipation();
      check_gap(gap, nstep);
      trace.max_energy_rise = std::max(trace.max_energy_rise, rp.energy - e_prev);
      trace.rows.push_back({nstep, nstep * dt, rp.energy, rp.dissipation(), gap, true, true});
      e_prev = rp.energy;
    }
    return trace;
  }

  // Scheme 2: bootstrap with the first-order scheme, then BDF2.
  const double e0_plain = energy(g, cur, pr);
  trace.rows.push_back({0, 0.0, 0.0, 0.0, 0.0, false, false});
  State prev = cur;
  {
    SchemeOperators boot(g, pr, dt, 1);
    StepReport rp;
    cur = step_first_order(cur, pr, dt, boot, {}, &rp);
    check_gap(e0_plain - rp.energy - rp.dissipation(), 1);
  }
  double e_prev_mod = modified_energy_bdf2(g, cur, prev, pr);
  {
    const DissipationReport d1 = dissipation_report(g, cur, pr, dt);
    trace.rows.push_back({1, dt, e_prev_mod, d1.total(), 0.0, true, false});
  }
  if (steps >= 2) {
    SchemeOperators ops(g, pr, dt, 2);
    for (int nstep = 2; nstep <= steps; ++nstep) {
      StepReport rp;
      State next = step_second_order(cur, prev, pr, dt, ops, {}, &rp);
      prev = std::move(cur);
      cur = std::move(next);
      const double e_mod = modified_energy_bdf2(g, cur, prev, pr);
      const double gap = e_prev_mod - e_mod - rp.dissipation();
      check_gap(gap, nstep);
      trace.max_energy_rise = std::max(trace.max_energy_rise, e_mod - e_prev_mod);
      trace.rows.push_back({nstep, nstep * dt, e_mod, rp.dissipation(), gap, true, true});
      e_prev_mod = e_mod;
    }
  }
  return trace;
}

/// Deterministic smooth random admissible state: u and b are vector curls
/// of low-frequency random node stream functions (hence exactly
/// divergence-free with zero normal boundary faces), q is drawn from
/// [0.5, 1]. Identical seeds give bitwise-identical states on any platform
/// (std::mt19937_64 has a standard-mandated sequence).
inline State random_admissible_state(const StaggeredGrid& g, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  constexpr double kPi = 3.141592653589793238462643383279502884;
  constexpr int kModes = 3;

  auto random_stream = [&]() {
    std::array<std::array<double, kModes>, kModes> c{};
    for (int m = 0; m < kModes; ++m)
      for (int l = 0; l < kModes; ++l)
        c[m][l] = unit(rng) / double((m + 1) * (m + 1) + (l + 1) * (l + 1));
    return sample_nodes(g, [&](double x, double y) {
      double v = 0.0;
      for (int m = 0; m < kModes; ++m)
        for (int l = 0; l < kModes; ++l)
          v += c[m][l] * std::sin((m + 1) * kPi * x) * std::sin((l + 1) * kPi * y);
      return v;
    });
  };

  // The streams vanish analytically on the boundary, but sin(mπ·1) carries
  // round-off, so the constrained normal faces are zeroed explicitly to make
  // the admissibility exact rather than approximate.
  auto enforce_boundary = [&](VectorField& v) {
    v.x.row(0) = 0.0;
    v.x.row(g.n()) = 0.0;
    v.y.col(0) = 0.0;
    v.y.col(g.n()) = 0.0;
  };

  State s = State::initial(g);
  {
    const ScalarField psi_u = random_stream();
    VectorField u = curl_scalar(g, psi_u);
    u.bc = VectorBC::Velocity;
    enforce_boundary(u);
    s.u = std::move(u);
  }
  {
    const ScalarField psi_b = random_stream();
    VectorField b = curl_scalar(g, psi_b);
    b.bc = VectorBC::MagneticNormal;
    enforce_boundary(b);
    s.b = std::move(b);
  }
  s.q = 0.75 + 0.25 * unit(rng);
  s.step = 0;
  return s;
}

}  // namespace savmhd
