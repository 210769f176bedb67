/// @file manufactured.hpp
/// @brief Closed-form exact solution and matching body forces used by the
///        verification harness.
///
/// The velocity derives from the stream function
///   ψ(x,y,t) = k sin²(πx) sin²(πy) cos(t),
/// so it is exactly divergence-free and no-slip:
///   u1 =  πk sin²(πx) sin(2πy) cos(t)
///   u2 = -πk sin(2πx) sin²(πy) cos(t)
/// The magnetic field
///   b1 =  k sin(πx) cos(πy) cos(t)
///   b2 = -k cos(πx) sin(πy) cos(t)
/// has zero normal trace, zero divergence, and vorticity
///   ∇×b = 2πk sin(πx) sin(πy) cos(t), which vanishes on the boundary.
/// The pressure is the zero-mean bilinear k(x-½)(y-½)cos(t)/10 and the
/// auxiliary variable is q(t) = exp(-t/T).
///
/// A useful identity: u = 2π sin(πx) sin(πy) · b pointwise, so b×u ≡ 0 and
/// the induction forcing has no nonlinear contribution. The momentum forcing
/// keeps its quadratic terms. All forcing formulas below are hand-derived
/// from the PDE; an independent finite-difference oracle in the test suite
/// gates them to 1e-7 absolute before any convergence study runs.

#pragma once

#include <cmath>
#include <utility>

#include "savmhd/fields.hpp"
#include "savmhd/stepper.hpp"

namespace savmhd {

/// Exact-solution family: parameters plus the amplitude k. k = 0 gives the
/// zero solution (useful for pure auxiliary-variable trajectories).
struct ManufacturedCase {
  Params params{};
  double k = 0.01;

  static constexpr double kPi = 3.141592653589793238462643383279502884;

  // ---- pointwise exact fields -------------------------------------------
  double u1(double x, double y, double t) const {
    const double sx = std::sin(kPi * x);
    return kPi * k * sx * sx * std::sin(2.0 * kPi * y) * std::cos(t);
  }
  double u2(double x, double y, double t) const {
    const double sy = std::sin(kPi * y);
    return -kPi * k * std::sin(2.0 * kPi * x) * sy * sy * std::cos(t);
  }
  double p(double x, double y, double t) const {
    return 0.1 * k * (x - 0.5) * (y - 0.5) * std::cos(t);
  }
  double b1(double x, double y, double t) const {
    return k * std::sin(kPi * x) * std::cos(kPi * y) * std::cos(t);
  }
  double b2(double x, double y, double t) const {
    return -k * std::cos(kPi * x) * std::sin(kPi * y) * std::cos(t);
  }
  double vorticity(double x, double y, double t) const {
    return 2.0 * kPi * k * std::sin(kPi * x) * std::sin(kPi * y) * std::cos(t);
  }
  double q(double t) const { return std::exp(-t / params.T); }

  // ---- momentum forcing: u_t + (u·∇)u - nu·Δu + ∇p - alpha·(∇×b)×b ------
  double fu1(double x, double y, double t) const {
    const double c = std::cos(t), s = std::sin(t);
    const double sx = std::sin(kPi * x), cx = std::cos(kPi * x);
    const double sy = std::sin(kPi * y);
    const double s2x = std::sin(2.0 * kPi * x), c2x = std::cos(2.0 * kPi * x);
    const double s2y = std::sin(2.0 * kPi * y), c2y = std::cos(2.0 * kPi * y);
    const double pi2 = kPi * kPi, pi3 = pi2 * kPi;
    const double u1v = kPi * k * sx * sx * s2y * c;
    const double u2v = -kPi * k * s2x * sy * sy * c;
    const double du1dx = pi2 * k * s2x * s2y * c;
    const double du1dy = 2.0 * pi2 * k * sx * sx * c2y * c;
    const double lap_u1 = 2.0 * pi3 * k * s2y * (c2x - 2.0 * sx * sx) * c;
    const double dpdx = 0.1 * k * (y - 0.5) * c;
    const double lorentz1 = 2.0 * kPi * k * k * sx * cx * sy * sy * c * c;
    return -kPi * k * sx * sx * s2y * s          // u1_t
           + u1v * du1dx + u2v * du1dy           // (u·∇)u, x-component
           - params.nu * lap_u1 + dpdx - params.alpha * lorentz1;
  }
  double fu2(double x, double y, double t) const {
    const double c = std::cos(t), s = std::sin(t);
    const double sx = std::sin(kPi * x);
    const double sy = std::sin(kPi * y), cy = std::cos(kPi * y);
    const double s2x = std::sin(2.0 * kPi * x);
    const double s2y = std::sin(2.0 * kPi * y), c2y = std::cos(2.0 * kPi * y);
    const double pi2 = kPi * kPi, pi3 = pi2 * kPi;
    const double u1v = kPi * k * sx * sx * s2y * c;
    const double u2v = -kPi * k * s2x * sy * sy * c;
    const double du2dx = -2.0 * pi2 * k * std::cos(2.0 * kPi * x) * sy * sy * c;
    const double du2dy = -pi2 * k * s2x * s2y * c;
    const double lap_u2 = 2.0 * pi3 * k * s2x * (2.0 * sy * sy - c2y) * c;
    const double dpdy = 0.1 * k * (x - 0.5) * c;
    const double lorentz2 = 2.0 * kPi * k * k * sx * sx * sy * cy * c * c;
    return kPi * k * s2x * sy * sy * s           // u2_t
           + u1v * du2dx + u2v * du2dy           // (u·∇)u, y-component
           - params.nu * lap_u2 + dpdy - params.alpha * lorentz2;
  }

  // ---- induction forcing: b_t + eta·∇×(∇×b) + ∇×(b×u), with b×u ≡ 0 -----
  double fb1(double x, double y, double t) const {
    const double c = std::cos(t), s = std::sin(t);
    return k * std::sin(kPi * x) * std::cos(kPi * y) *
           (2.0 * kPi * kPi * params.eta * c - s);
  }
  double fb2(double x, double y, double t) const {
    const double c = std::cos(t), s = std::sin(t);
    return k * std::cos(kPi * x) * std::sin(kPi * y) *
           (s - 2.0 * kPi * kPi * params.eta * c);
  }

  /// Exact state sampled on the grid at time t. The step index is left at 0;
  /// callers comparing against stepped states use the fields and q only.
  State exact_state(const StaggeredGrid& g, double t) const {
    State st;
    st.u = sample_faces(
        g, VectorBC::Velocity, [&](double x, double y) { return u1(x, y, t); },
        [&](double x, double y) { return u2(x, y, t); });
    st.p = sample_cells(g, [&](double x, double y) { return p(x, y, t); });
    st.b = sample_faces(
        g, VectorBC::MagneticNormal, [&](double x, double y) { return b1(x, y, t); },
        [&](double x, double y) { return b2(x, y, t); });
    st.q = q(t);
    st.step = 0;
    return st;
  }

  /// Body forces sampled at the faces at time t (momentum, induction).
  std::pair<VectorField, VectorField> forcing(const StaggeredGrid& g, double t) const {
    VectorField fu = sample_faces(
        g, VectorBC::None, [&](double x, double y) { return fu1(x, y, t); },
        [&](double x, double y) { return fu2(x, y, t); });
    VectorField fb = sample_faces(
        g, VectorBC::None, [&](double x, double y) { return fb1(x, y, t); },
        [&](double x, double y) { return fb2(x, y, t); });
    return {std::move(fu), std::move(fb)};
  }
};

}  // namespace savmhd
