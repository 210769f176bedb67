/// @file acceptance_main.cpp
/// @brief Acceptance gate: one PASS/FAIL line per criterion with measured
///        values against tolerances pinned below; exits nonzero when any
///        criterion fails. The forcing-oracle gate (criterion 7) executes
///        before the convergence criteria (3-4) whose protocol depends on
///        the closed-form forcing, so the printed lines stay in numeric
///        order while the computation order honors the gate.

#include <array>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "savmhd/errors.hpp"
#include "savmhd/harness.hpp"
#include "savmhd/manufactured.hpp"
#include "savmhd/operators.hpp"
#include "savmhd/stepper.hpp"
#include "testutil.hpp"

using namespace savmhd;

namespace {

// ---------------------------------------------------------------------------
// Pinned protocol constants and tolerances.
// ---------------------------------------------------------------------------
constexpr int kDecayN = 64;              // criteria 1-2 grid
constexpr int kDecaySteps = 20;          // criteria 1-2 steps per dt
const std::vector<double> kDecayDts{0.01, 0.1, 1.0, 10.0};
constexpr double kEnergyGapTol = 1e-9;   // criteria 1-2

constexpr int kConvN = 256;              // criteria 3-4, 8 grid
const std::vector<double> kConvLadder{1.0 / 2,  1.0 / 4,  1.0 / 8,
                                      1.0 / 16, 1.0 / 32, 1.0 / 64};
constexpr double kOrder1Band = 0.15;     // criterion 3: 1.0 +/- 0.15
constexpr double kOrder2Band = 0.25;     // criterion 4: 2.0 +/- 0.25

const std::vector<int> kSplitGrids{8, 16};          // criterion 5
const std::vector<double> kSplitDts{0.25, 0.0625};  // {1/4, 1/16}
constexpr int kSplitStates = 10;
constexpr double kSplitRelTol = 1e-9;    // u, p, b
constexpr double kSplitQTol = 1e-11;     // |dq|

constexpr int kAdjCases = 100;           // criterion 6
constexpr double kAdjTol = 1e-13;
constexpr double kConsistencyBand = 0.2; // criterion 6: 2.0 +/- 0.2

constexpr int kForcingPoints = 100;      // criterion 7
constexpr double kForcingTol = 1e-7;

constexpr double kQRecursionTol = 1e-13; // criterion 8 (relative, vs round-off)

std::string strf(const char* fmt, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

void progress(const char* what) { std::fprintf(stderr, "[acceptance] %s\n", what); }

struct Gate {
  std::array<std::string, 9> line;  // 1-based by criterion
  std::array<bool, 9> pass{};

  void set(int criterion, bool ok, const std::string& text) {
    pass[size_t(criterion)] = ok;
    line[size_t(criterion)] = text;
  }
  int finish() const {
    bool all = true;
    for (int c = 1; c <= 8; ++c) {
      all = all && pass[size_t(c)];
      std::printf("criterion %d %s %s\n", c, pass[size_t(c)] ? "PASS" : "FAIL",
                  line[size_t(c)].c_str());
    }
    std::printf("acceptance %s\n", all ? "PASS" : "FAIL");
    return all ? 0 : 1;
  }

  // A crash inside one criterion must not lose the report for the others.
  template <typename Fn>
  void guarded(int criterion, Fn&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      set(criterion, false,
          strf("unhandled %s: %s", error_type_name(e), e.what()));
    }
  }
};

// Least-squares order over the finest `tail` rows of a q-error ladder (the
// error bound is asymptotic; the coarsest rows take only 2-4 steps).
double q_tail_order(const ConvergenceReport& rep, size_t tail) {
  std::vector<double> xs, ys;
  const size_t first = rep.rows.size() > tail ? rep.rows.size() - tail : 0;
  for (size_t i = first; i < rep.rows.size(); ++i) {
    xs.push_back(rep.rows[i].dt);
    ys.push_back(rep.rows[i].q_err_max);
  }
  return testutil::fit_order(xs, ys);
}

}  // namespace

int main() {
  const ManufacturedCase mc;  // nu = eta = 0.01, alpha = 1, T = 1, k = 0.01
  Gate gate;

  // ---- Criterion 1: unconditional energy law, first-order scheme ----------
  gate.guarded(1, [&] {
    progress("criterion 1: first-order decay traces at n=64");
    const StaggeredGrid g(kDecayN);
    const State init = mc.exact_state(g, 0.0);
    double min_gap = std::numeric_limits<double>::infinity();
    bool ok = true;
    std::string fail;
    for (double dt : kDecayDts) {
      try {
        const DecayTrace tr = run_decay(g, mc.params, 1, dt, kDecaySteps, init);
        min_gap = std::min(min_gap, tr.min_gap);
      } catch (const StabilityViolation& e) {
        ok = false;
        fail = e.what();
      }
    }
    gate.set(1, ok && min_gap >= -kEnergyGapTol,
             ok ? strf("energy law, first order: min gap %.3e over dt in "
                       "{0.01,0.1,1,10}, 20 steps at n=%d (tol %.0e)",
                       min_gap, kDecayN, -kEnergyGapTol)
                : "energy law violated: " + fail);
  });

  // ---- Criterion 2: BDF2 modified-energy monotonicity ----------------------
  gate.guarded(2, [&] {
    progress("criterion 2: second-order decay traces at n=64");
    const StaggeredGrid g(kDecayN);
    const State init = mc.exact_state(g, 0.0);
    double max_rise = 0.0;
    double min_gap = std::numeric_limits<double>::infinity();
    bool ok = true;
    std::string fail;
    for (double dt : kDecayDts) {
      try {
        const DecayTrace tr = run_decay(g, mc.params, 2, dt, kDecaySteps, init);
        max_rise = std::max(max_rise, tr.max_energy_rise);
        min_gap = std::min(min_gap, tr.min_gap);
      } catch (const StabilityViolation& e) {
        ok = false;
        fail = e.what();
      }
    }
    gate.set(2, ok && max_rise <= kEnergyGapTol,
             ok ? strf("modified energy monotone, second order: max rise %.3e, "
                       "min gap %.3e, same protocol (tol %.0e)",
                       max_rise, min_gap, kEnergyGapTol)
                : "modified-energy law violated: " + fail);
  });

  // ---- Criterion 7 (gate for 3-4): finite-difference forcing oracle -------
  bool forcing_ok = false;
  gate.guarded(7, [&] {
    progress("criterion 7: finite-difference forcing gate");
    const testutil::FDForcingOracle fd{mc};
    std::mt19937_64 rng(31415);
    std::uniform_real_distribution<double> inner(0.02, 0.98);
    std::uniform_real_distribution<double> times(0.0, 2.0);
    double worst = 0.0;
    for (int c = 0; c < kForcingPoints; ++c) {
      const double x = inner(rng), y = inner(rng), t = times(rng);
      worst = std::max(worst, std::abs(mc.fu1(x, y, t) - fd.fu1(x, y, t)));
      worst = std::max(worst, std::abs(mc.fu2(x, y, t) - fd.fu2(x, y, t)));
      worst = std::max(worst, std::abs(mc.fb1(x, y, t) - fd.fb1(x, y, t)));
      worst = std::max(worst, std::abs(mc.fb2(x, y, t) - fd.fb2(x, y, t)));
    }
    forcing_ok = worst <= kForcingTol;
    gate.set(7, forcing_ok,
             strf("closed-form vs finite-difference forcing: worst %.3e abs at "
                  "%d random (x,y,t) (tol %.0e); gates criteria 3-4",
                  worst, kForcingPoints, kForcingTol));
  });

  // ---- Criteria 3-4: temporal convergence orders at n=256 ------------------
  ConvergenceReport rep1, rep2;
  bool have_rep1 = false, have_rep2 = false;
  const auto order_line = [](const ConvergenceReport& rep, double center,
                             double band) {
    std::string s;
    bool ok = true;
    for (int c = 0; c < kErrCount; ++c) {
      const double o = rep.fitted_order[size_t(c)];
      ok = ok && std::abs(o - center) <= band;
      int flagged = 0;
      for (const ConvergenceRow& row : rep.rows) flagged += row.flagged[size_t(c)];
      s += strf("%s%s=%.3f", c ? " " : "", err_column_name(c), o);
      if (flagged > 0) s += strf("(%d rows under floor excluded)", flagged);
    }
    s += strf(" (target %.1f +/- %.2f)", center, band);
    return std::pair<bool, std::string>(ok, s);
  };
  gate.guarded(3, [&] {
    if (!forcing_ok) {
      gate.set(3, false, "skipped: forcing gate (criterion 7) failed");
      return;
    }
    progress("criterion 3: first-order ladder at n=256 (minutes)");
    rep1 = run_convergence(mc, 1, kConvN, kConvLadder);
    have_rep1 = true;
    const auto r = order_line(rep1, 1.0, kOrder1Band);
    gate.set(3, r.first, "fitted temporal orders, first order: " + r.second);
  });
  gate.guarded(4, [&] {
    if (!forcing_ok) {
      gate.set(4, false, "skipped: forcing gate (criterion 7) failed");
      return;
    }
    progress("criterion 4: second-order ladder at n=256 (minutes)");
    rep2 = run_convergence(mc, 2, kConvN, kConvLadder);
    have_rep2 = true;
    const auto r = order_line(rep2, 2.0, kOrder2Band);
    gate.set(4, r.first, "fitted temporal orders, second order: " + r.second);
  });

  // ---- Criterion 5: splitting equivalence -----------------------------------
  gate.guarded(5, [&] {
    progress("criterion 5: split step vs monolithic coupled solve");
    double worst_u = 0.0, worst_p = 0.0, worst_b = 0.0, worst_q = 0.0;
    for (int n : kSplitGrids) {
      const StaggeredGrid g(n);
      for (double dt : kSplitDts) {
        const SchemeOperators ops(g, mc.params, dt, 1);
        for (int s = 1; s <= kSplitStates; ++s) {
          const State st = random_admissible_state(g, (unsigned long long)s);
          const State split = step_first_order(st, mc.params, dt, ops);
          const testutil::MonolithicResult mono =
              testutil::monolithic_step(st, nullptr, mc.params, dt, 1);
          worst_u = std::max(worst_u, testutil::rel_l2_diff(g, split.u, mono.u));
          worst_p = std::max(worst_p, testutil::rel_l2_diff(g, split.p, mono.p));
          worst_b = std::max(worst_b, testutil::rel_l2_diff(g, split.b, mono.b));
          worst_q = std::max(worst_q, std::abs(split.q - mono.q));
        }
      }
    }
    const bool ok = worst_u <= kSplitRelTol && worst_p <= kSplitRelTol &&
                    worst_b <= kSplitRelTol && worst_q <= kSplitQTol;
    gate.set(5, ok,
             strf("split vs monolithic over %d states x n in {8,16} x dt in "
                  "{1/4,1/16}: rel u %.2e, p %.2e, b %.2e (tol %.0e); |dq| %.2e "
                  "(tol %.0e)",
                  kSplitStates, worst_u, worst_p, worst_b, kSplitRelTol, worst_q,
                  kSplitQTol));
  });

  // ---- Criterion 6: operator adjointness and consistency --------------------
  gate.guarded(6, [&] {
    progress("criterion 6: operator property suite");
    const double adj_divgrad = testutil::max_divgrad_adjointness_rel(kAdjCases, 42);
    const double adj_curl = testutil::max_curl_adjointness_rel(kAdjCases, 42);
    const std::vector<testutil::OperatorOrder> orders =
        testutil::operator_consistency_orders(0.0);
    bool ok = adj_divgrad <= kAdjTol && adj_curl <= kAdjTol;
    std::string detail =
        strf("adjointness rel defect: div/grad %.2e, curl pair %.2e (tol %.0e); "
             "orders on manufactured fields n in {16,32,64,128}:",
             adj_divgrad, adj_curl, kAdjTol);
    for (const testutil::OperatorOrder& op : orders) {
      if (op.exact_roundoff) {
        detail += strf(" %s=exact", op.name);
      } else {
        ok = ok && std::abs(op.order - 2.0) <= kConsistencyBand;
        detail += strf(" %s=%.3f", op.name, op.order);
      }
    }
    detail += strf(" (target 2.0 +/- %.1f; 'exact' = error at round-off on this "
                   "field)",
                   kConsistencyBand);
    gate.set(6, ok, detail);
  });

  // ---- Criterion 8: scalar-variable trajectory ------------------------------
  gate.guarded(8, [&] {
    progress("criterion 8: q-trajectory checks");
    // (a) Zero-nonlinearity runs follow the exact rational recursion. In the
    // exact zero state the closure inner products vanish, so its denominator
    // decays like exp(-t/T) and the singularity guard deliberately refuses
    // t beyond ~27.6*T; the step counts below stay inside that envelope
    // while still covering small, unit, and large step sizes.
    double worst_rel = 0.0;
    {
      const StaggeredGrid g(8);
      const Params pr = mc.params;
      const std::pair<double, int> protocol[] = {{0.25, 20}, {1.0, 20}, {10.0, 2}};
      for (const auto& [dt, steps] : protocol) {
        const SchemeOperators ops(g, pr, dt, 1);
        State s = State::initial(g);
        for (int n = 1; n <= steps; ++n) {
          s = step_first_order(s, pr, dt, ops);
          const double expected = std::pow(pr.T / (pr.T + dt), n);
          worst_rel = std::max(worst_rel, testutil::rel_diff(s.q, expected));
        }
      }
    }
    const bool rec_ok = worst_rel <= kQRecursionTol;

    // (b) Manufactured q-error decreases at the scheme's order. The fit uses
    // the three finest rows: the coarsest take 2-4 steps and sit above the
    // asymptotic regime the error bound describes.
    const bool have_reports = have_rep1 && have_rep2;
    bool dec_ok = true;
    double tail1 = std::numeric_limits<double>::quiet_NaN();
    double tail2 = std::numeric_limits<double>::quiet_NaN();
    if (have_reports) {
      for (const ConvergenceReport* rep : {&rep1, &rep2})
        for (size_t i = 0; i + 1 < rep->rows.size(); ++i)
          dec_ok = dec_ok && rep->rows[i + 1].q_err_max < rep->rows[i].q_err_max;
      tail1 = q_tail_order(rep1, 3);
      tail2 = q_tail_order(rep2, 3);
      dec_ok = dec_ok && std::abs(tail1 - 1.0) <= kOrder1Band &&
               std::abs(tail2 - 2.0) <= kOrder2Band;
    } else {
      dec_ok = false;
    }
    gate.set(8, rec_ok && dec_ok,
             have_reports
                 ? strf("zero-nonlinearity recursion worst rel %.2e over dt in "
                        "{1/4,1,10} (tol %.0e); manufactured q-error halving: "
                        "monotone decrease, tail orders %.3f (first, target 1.0 "
                        "+/- %.2f) and %.3f (second, target 2.0 +/- %.2f)",
                        worst_rel, kQRecursionTol, tail1, kOrder1Band, tail2,
                        kOrder2Band)
                 : strf("zero-nonlinearity recursion worst rel %.2e (tol %.0e); "
                        "q-error ladder unavailable (criteria 3-4 skipped)",
                        worst_rel, kQRecursionTol));
  });

  return gate.finish();
}
