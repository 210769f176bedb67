/// @file stepper.hpp
/// @brief IMEX time integrators with a scalar auxiliary variable.
///
/// The continuous system (no-slip velocity u, pressure p, magnetic field b
/// with zero normal trace and zero boundary vorticity, coupling alpha,
/// viscosities nu/eta) is augmented with a scalar q(t) = exp(-t/T), q(0)=1,
/// whose equation absorbs the explicitly treated nonlinear terms. Each step
/// then costs:
///   - two coupled velocity–pressure solves with the same factored matrix,
///   - two SPD magnetic solves with the same factored matrix,
///   - one guarded scalar equation for the auxiliary variable.
/// The resulting update satisfies a discrete energy identity with no step
/// size restriction: the energy drop minus the physical dissipation equals
/// a sum of squares (the "gap"), which is what the stability tests pin.
///
/// Cancellation of the nonlinear work in that identity is exact only if the
/// same nonlinear arrays are used (a) as part-2 right-hand sides and (b)
/// inside the scalar equation's inner products. step_first_order and
/// step_second_order therefore compute N_u, N_b once and reuse them.

#pragma once

#include <chrono>
#include <cmath>

#include "savmhd/errors.hpp"
#include "savmhd/fields.hpp"
#include "savmhd/operators.hpp"
#include "savmhd/solvers.hpp"

namespace savmhd {

/// Relative floor below which the scalar-closure denominator counts as
/// singular: |denom| < kClosureGuard · (1/dt + 1/T) throws SingularClosure.
inline constexpr double kClosureGuard = 1e-12;

/// Physical and auxiliary-variable parameters. All must be positive.
struct Params {
  double nu = 0.01;     ///< kinematic viscosity
  double eta = 0.01;    ///< magnetic diffusivity
  double alpha = 1.0;   ///< velocity–magnetic coupling
  double T = 1.0;       ///< auxiliary-variable relaxation time

  void validate() const {
    if (!(nu > 0.0 && eta > 0.0 && alpha > 0.0 && T > 0.0))
      throw std::invalid_argument("Params: nu, eta, alpha, T must all be positive");
  }
};

/// Discrete state after `step` uniform steps of size dt (t = step·dt is
/// recomputed from the integer index, never accumulated).
struct State {
  VectorField u;  ///< velocity (VectorBC::Velocity)
  ScalarField p;  ///< pressure at cells, discrete mean zero
  VectorField b;  ///< magnetic field (VectorBC::MagneticNormal)
  double q = 1.0; ///< scalar auxiliary variable
  int step = 0;   ///< time-step index

  double time(double dt) const { return step * dt; }

  static State initial(const StaggeredGrid& g) {
    State s;
    s.u = VectorField::zeros(g, VectorBC::Velocity);
    s.p = ScalarField::zeros(g, ScalarLoc::Cell);
    s.b = VectorField::zeros(g, VectorBC::MagneticNormal);
    s.q = 1.0;
    s.step = 0;
    return s;
  }
};

/// Optional body forces for one step, sampled at the implicit time level.
struct Forcing {
  const VectorField* u = nullptr;  ///< momentum force (nullptr = zero)
  const VectorField* b = nullptr;  ///< induction force (nullptr = zero)
};

/// Per-step diagnostics.
struct StepReport {
  double energy = 0.0;          ///< plain energy of the new state (the BDF2
                                ///< modified energy needs two states and is
                                ///< computed by callers tracking a history)
  double diss_viscous = 0.0;    ///< nu·dt·⟨-Δu,u⟩ at the new state
  double diss_magnetic = 0.0;   ///< eta·alpha·dt·(‖∇×b‖²+‖∇·b‖²)
  double diss_sav = 0.0;        ///< (dt/T)·q²
  double closure_denominator = 0.0;
  double sav_scale = 0.0;       ///< S = exp(t/T)·q at the new time level
  double a1 = 0.0, a2 = 0.0;    ///< closure inner products
  double max_solver_residual = 0.0;
  double wall_seconds = 0.0;    ///< wall-clock cost of the step

  double dissipation() const { return diss_viscous + diss_magnetic + diss_sav; }
};

/// The factored constant-coefficient solves shared by every step of a run.
/// order 1 uses sigma = 1/dt; order 2 (BDF2) uses sigma = 3/(2·dt).
class SchemeOperators {
 public:
  SchemeOperators(const StaggeredGrid& g, const Params& pr, double dt, int order)
      : grid_(g),
        params_(pr),
        dt_(dt),
        order_(order),
        stokes_(g, sigma_for(dt, order), pr.nu),
        magnetic_(g, sigma_for(dt, order), pr.eta) {
    pr.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("SchemeOperators: need dt > 0");
    if (order != 1 && order != 2)
      throw std::invalid_argument("SchemeOperators: order must be 1 or 2");
  }

  static double sigma_for(double dt, int order) {
    if (!(dt > 0.0)) throw std::invalid_argument("SchemeOperators: need dt > 0");
    return order == 1 ? 1.0 / dt : 1.5 / dt;
  }

  const StokesSolver& stokes() const { return stokes_; }
  const MagneticSolver& magnetic() const { return magnetic_; }
  const StaggeredGrid& grid() const { return grid_; }
  const Params& params() const { return params_; }
  double dt() const { return dt_; }
  int order() const { return order_; }

  void match_or_throw(const StaggeredGrid& g, const Params& pr, double dt, int order) const {
    detail::require(g == grid_ && dt == dt_ && order == order_ && pr.nu == params_.nu &&
                        pr.eta == params_.eta && pr.alpha == params_.alpha &&
                        pr.T == params_.T,
                    "SchemeOperators: factored operators do not match this step");
  }

 private:
  StaggeredGrid grid_;
  Params params_;
  double dt_;
  int order_;
  StokesSolver stokes_;
  MagneticSolver magnetic_;
};

/// Energy of a state: ½‖u‖² + (alpha/2)‖b‖² + ½q².
inline double energy(const StaggeredGrid& g, const State& s, const Params& pr) {
  return 0.5 * inner_product(g, s.u, s.u) + 0.5 * pr.alpha * inner_product(g, s.b, s.b) +
         0.5 * s.q * s.q;
}

/// Modified (BDF2) energy of the pair (current, previous):
/// ¼(‖u‖² + ‖2u-uᵖ‖²) + (alpha/4)(‖b‖² + ‖2b-bᵖ‖²) + ¼(q² + (2q-qᵖ)²).
inline double modified_energy_bdf2(const StaggeredGrid& g, const State& cur,
                                   const State& prev, const Params& pr) {
  const VectorField du = lincomb(2.0, cur.u, -1.0, prev.u);
  const VectorField db = lincomb(2.0, cur.b, -1.0, prev.b);
  const double dq = 2.0 * cur.q - prev.q;
  return 0.25 * (inner_product(g, cur.u, cur.u) + inner_product(g, du, du)) +
         0.25 * pr.alpha * (inner_product(g, cur.b, cur.b) + inner_product(g, db, db)) +
         0.25 * (cur.q * cur.q + dq * dq);
}

/// Dissipation produced by one step ending at `s`, split by mechanism. The
/// quadratic forms are exactly those of the implicit operators, so the
/// energy identity holds to round-off:
///   viscous  = nu·dt·⟨-Δu, u⟩          (≡ nu·dt·h1_semi(u)², velocity form)
///   magnetic = eta·alpha·dt·(‖∇×b‖² + ‖∇·b‖²)
///   sav      = (dt/T)·q²
struct DissipationReport {
  double viscous = 0.0, magnetic = 0.0, sav = 0.0;
  double total() const { return viscous + magnetic + sav; }
};

inline DissipationReport dissipation_report(const StaggeredGrid& g, const State& s,
                                            const Params& pr, double dt) {
  DissipationReport r;
  const Norms nu_norm = norms(g, s.u);
  r.viscous = pr.nu * dt * nu_norm.h1_semi * nu_norm.h1_semi;
  const Norms nb_norm = norms(g, s.b);
  r.magnetic = pr.eta * pr.alpha * dt * nb_norm.h1_semi * nb_norm.h1_semi;
  r.sav = dt / pr.T * s.q * s.q;
  return r;
}

/// Solve the scalar closure
///   (coeff·e^{-t/T} - e^{t/T}·a2) · S = e^{t/T}·a1 + q_rhs
/// for S, guarding against a vanishing denominator. coeff and q_rhs encode
/// the time discretization (order 1: coeff = 1/dt + 1/T, q_rhs = qⁿ/dt;
/// order 2: coeff = 3/(2dt) + 1/T, q_rhs = (4qⁿ - qⁿ⁻¹)/(2dt)).
struct ClosureResult {
  double S = 0.0;
  double denominator = 0.0;
};

inline ClosureResult solve_sav_closure(double a1, double a2, double q_rhs, double t_new,
                                       double T, double coeff, double dt) {
  const double ep = std::exp(t_new / T);
  const double em = std::exp(-t_new / T);
  ClosureResult r;
  r.denominator = coeff * em - ep * a2;
  const double guard = kClosureGuard * (1.0 / dt + 1.0 / T);
  if (!(std::abs(r.denominator) >= guard))
    throw SingularClosure("scalar closure denominator below guard: |" +
                          std::to_string(r.denominator) + "| < " + std::to_string(guard));
  r.S = (ep * a1 + q_rhs) / r.denominator;
  return r;
}

namespace detail {

/// Everything both steps share once the time-discretization choices
/// (sigma, q-equation coefficient and right-hand side, extrapolated fields
/// for the nonlinear terms, part-1 right-hand sides) have been made.
inline State step_common(const StaggeredGrid& g, const Params& pr, double dt,
                         const SchemeOperators& ops, const Forcing& force,
                         const VectorField& u_nl, const VectorField& b_nl,
                         const VectorField& rhs_u1_time, const VectorField& rhs_b1_time,
                         double coeff, double q_rhs, int new_step, StepReport* report) {
  const auto wall_start = std::chrono::steady_clock::now();
  const double t_new = new_step * dt;
  const double ep = std::exp(t_new / pr.T);
  const double em = std::exp(-t_new / pr.T);

  // Explicit nonlinear arrays; reused verbatim in the scalar equation so the
  // nonlinear work cancels exactly in the energy identity.
  const VectorField conv = convective(g, u_nl, u_nl);
  const VectorField lor = lorentz(g, b_nl);
  const VectorField ind = induction_nl(g, b_nl, u_nl);
  VectorField N_u = lincomb(pr.alpha, lor, -1.0, conv);
  VectorField N_b = lincomb(-1.0, ind, 0.0, ind);

  // Part-1 solves carry the time-history terms and the body force.
  VectorField rhs_u1 = rhs_u1_time;
  if (force.u != nullptr) rhs_u1 = lincomb(1.0, rhs_u1, 1.0, *force.u);
  VectorField rhs_b1 = rhs_b1_time;
  if (force.b != nullptr) rhs_b1 = lincomb(1.0, rhs_b1, 1.0, *force.b);

  const StokesSolver::Result part1 = ops.stokes().solve(rhs_u1);
  const StokesSolver::Result part2 = ops.stokes().solve(N_u);
  const MagneticSolver::Result mag1 = ops.magnetic().solve(rhs_b1);
  const MagneticSolver::Result mag2 = ops.magnetic().solve(N_b);

  const double a1 =
      -inner_product(g, N_u, part1.u) - pr.alpha * inner_product(g, N_b, mag1.b);
  const double a2 =
      -inner_product(g, N_u, part2.u) - pr.alpha * inner_product(g, N_b, mag2.b);

  const ClosureResult cl = solve_sav_closure(a1, a2, q_rhs, t_new, pr.T, coeff, dt);

  State out;
  out.u = lincomb(1.0, part1.u, cl.S, part2.u);
  out.p = lincomb(1.0, part1.p, cl.S, part2.p);
  out.b = lincomb(1.0, mag1.b, cl.S, mag2.b);
  out.q = em * cl.S;
  out.step = new_step;

  if (report != nullptr) {
    report->energy = energy(g, out, pr);
    const DissipationReport d = dissipation_report(g, out, pr, dt);
    report->diss_viscous = d.viscous;
    report->diss_magnetic = d.magnetic;
    report->diss_sav = d.sav;
    report->closure_denominator = cl.denominator;
    report->sav_scale = cl.S;
    report->a1 = a1;
    report->a2 = a2;
    report->max_solver_residual =
        std::max({part1.residual_momentum, part1.residual_divergence,
                  part2.residual_momentum, part2.residual_divergence, mag1.residual,
                  mag2.residual});
    report->wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
            .count();
  }
  return out;
}

}  // namespace detail

/// One first-order step from state s to step index s.step+1. Nonlinear
/// terms are evaluated at s; forcing (if any) belongs to the new time level.
inline State step_first_order(const State& s, const Params& pr, double dt,
                              const SchemeOperators& ops, const Forcing& force = {},
                              StepReport* report = nullptr) {
  pr.validate();
  const StaggeredGrid g = grid_of(s.p);
  ops.match_or_throw(g, pr, dt, 1);
  const double idt = 1.0 / dt;
  const VectorField rhs_u1 = lincomb(idt, s.u, 0.0, s.u);
  const VectorField rhs_b1 = lincomb(idt, s.b, 0.0, s.b);
  const double coeff = idt + 1.0 / pr.T;
  return detail::step_common(g, pr, dt, ops, force, s.u, s.b, rhs_u1, rhs_b1, coeff,
                             s.q * idt, s.step + 1, report);
}

/// One second-order (BDF2) step from states (s = step n, prev = step n-1).
/// Nonlinear terms use the extrapolation 2·(fields at n) - (fields at n-1).
inline State step_second_order(const State& s, const State& prev, const Params& pr,
                               double dt, const SchemeOperators& ops,
                               const Forcing& force = {}, StepReport* report = nullptr) {
  pr.validate();
  const StaggeredGrid g = grid_of(s.p);
  ops.match_or_throw(g, pr, dt, 2);
  detail::require(s.step == prev.step + 1,
                  "step_second_order: states must be consecutive steps");
  const double i2dt = 1.0 / (2.0 * dt);
  const VectorField u_bar = lincomb(2.0, s.u, -1.0, prev.u);
  const VectorField b_bar = lincomb(2.0, s.b, -1.0, prev.b);
  const VectorField rhs_u1 = lincomb(4.0 * i2dt, s.u, -i2dt, prev.u);
  const VectorField rhs_b1 = lincomb(4.0 * i2dt, s.b, -i2dt, prev.b);
  const double coeff = 3.0 * i2dt + 1.0 / pr.T;
  const double q_rhs = (4.0 * s.q - prev.q) * i2dt;
  return detail::step_common(g, pr, dt, ops, force, u_bar, b_bar, rhs_u1, rhs_b1, coeff,
                             q_rhs, s.step + 1, report);
}

}  // namespace savmhd
