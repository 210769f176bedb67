/// @file operators.hpp
/// @brief Discrete differential and nonlinear operators on the staggered
///        grid, plus the weighted inner products and norms they pair with.
///
/// Conventions shared by every operator:
///   - Outputs on constrained boundary faces (x at i∈{0,n}, y at j∈{0,n})
///     and boundary nodes are zero, so operator outputs live in the same
///     constrained space as admissible fields.
///   - Velocity-type fields use ghost reflection across tangential walls
///     (ghost = -first interior value), which places the no-slip wall value
///     exactly on the wall.
///   - Summation order is fixed (j outer, i inner) so results are
///     bit-reproducible run to run.
///
/// With the weights of inner_product(), the pairs (divergence, -gradient)
/// and (curl2d, curl_scalar) are exact discrete adjoints on admissible
/// fields; the tests pin this to round-off.

#pragma once

#include <cmath>

#include "savmhd/fields.hpp"

namespace savmhd {

/// Discrete gradient: cell scalar -> face vector, zero on boundary faces.
inline VectorField gradient(const StaggeredGrid& g, const ScalarField& p) {
  detail::require(p.loc == ScalarLoc::Cell, "gradient: input must live at cell centers");
  detail::check_shape(g, p, "gradient: field/grid mismatch");
  const int n = g.n();
  const double ih = 1.0 / g.spacing();
  VectorField r = VectorField::zeros(g, VectorBC::None);
  for (int j = 0; j < n; ++j)
    for (int i = 1; i <= n - 1; ++i) r.x(i, j) = (p.a(i, j) - p.a(i - 1, j)) * ih;
  for (int j = 1; j <= n - 1; ++j)
    for (int i = 0; i < n; ++i) r.y(i, j) = (p.a(i, j) - p.a(i, j - 1)) * ih;
  return r;
}

/// Discrete divergence: face vector -> cell scalar (conservative form).
inline ScalarField divergence(const StaggeredGrid& g, const VectorField& v) {
  detail::check_shape(g, v, "divergence: field/grid mismatch");
  const int n = g.n();
  const double ih = 1.0 / g.spacing();
  ScalarField r = ScalarField::zeros(g, ScalarLoc::Cell);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      r.a(i, j) = (v.x(i + 1, j) - v.x(i, j)) * ih + (v.y(i, j + 1) - v.y(i, j)) * ih;
  return r;
}

/// Scalar curl (vorticity): face vector -> node scalar. Boundary nodes are
/// zero — that is the discrete form of the vanishing boundary vorticity.
inline ScalarField curl2d(const StaggeredGrid& g, const VectorField& v) {
  detail::check_shape(g, v, "curl2d: field/grid mismatch");
  const int n = g.n();
  const double ih = 1.0 / g.spacing();
  ScalarField w = ScalarField::zeros(g, ScalarLoc::Node);
  for (int j = 1; j <= n - 1; ++j)
    for (int i = 1; i <= n - 1; ++i)
      w.a(i, j) = (v.y(i, j) - v.y(i - 1, j)) * ih - (v.x(i, j) - v.x(i, j - 1)) * ih;
  return w;
}

/// Vector curl of a node scalar: w -> (∂y w, -∂x w) on faces. For inputs
/// that vanish on boundary nodes the output vanishes on boundary faces, so
/// (curl2d, curl_scalar) is an exact adjoint pair on admissible fields.
inline VectorField curl_scalar(const StaggeredGrid& g, const ScalarField& w) {
  detail::require(w.loc == ScalarLoc::Node, "curl_scalar: input must live at nodes");
  detail::check_shape(g, w, "curl_scalar: field/grid mismatch");
  const int n = g.n();
  const double ih = 1.0 / g.spacing();
  VectorField r = VectorField::zeros(g, VectorBC::None);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= n; ++i) r.x(i, j) = (w.a(i, j + 1) - w.a(i, j)) * ih;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i < n; ++i) r.y(i, j) = -(w.a(i + 1, j) - w.a(i, j)) * ih;
  return r;
}

/// Five-point vector Laplacian Δv for velocity-type (no-slip) fields.
/// Normal neighbours use stored boundary values; tangential walls use the
/// ghost reflection. Output is zero on constrained boundary faces.
inline VectorField laplacian_velocity(const StaggeredGrid& g, const VectorField& v) {
  detail::require(v.bc == VectorBC::Velocity,
                  "laplacian_velocity: input must be a velocity-type field");
  detail::check_shape(g, v, "laplacian_velocity: field/grid mismatch");
  const int n = g.n();
  const double ih2 = 1.0 / (g.spacing() * g.spacing());
  VectorField r = VectorField::zeros(g, VectorBC::None);
  for (int j = 0; j < n; ++j)
    for (int i = 1; i <= n - 1; ++i) {
      const double c = v.x(i, j);
      const double s = (j - 1 >= 0) ? v.x(i, j - 1) : -c;  // ghost across wall y=0
      const double t = (j + 1 <= n - 1) ? v.x(i, j + 1) : -c;
      r.x(i, j) = (v.x(i + 1, j) - 2.0 * c + v.x(i - 1, j)) * ih2 + (t - 2.0 * c + s) * ih2;
    }
  for (int j = 1; j <= n - 1; ++j)
    for (int i = 0; i < n; ++i) {
      const double c = v.y(i, j);
      const double w = (i - 1 >= 0) ? v.y(i - 1, j) : -c;
      const double e = (i + 1 <= n - 1) ? v.y(i + 1, j) : -c;
      r.y(i, j) = (e - 2.0 * c + w) * ih2 + (v.y(i, j + 1) - 2.0 * c + v.y(i, j - 1)) * ih2;
    }
  return r;
}

/// Advective derivative (u·∇)w for velocity-type fields. Transverse
/// velocity components are brought to the face by 4-point averages; w's
/// derivatives are central with ghost reflection at tangential walls.
inline VectorField convective(const StaggeredGrid& g, const VectorField& u,
                              const VectorField& w) {
  detail::require(u.bc == VectorBC::Velocity && w.bc == VectorBC::Velocity,
                  "convective: both inputs must be velocity-type fields");
  detail::check_shape(g, u, "convective: field/grid mismatch");
  detail::check_shape(g, w, "convective: field/grid mismatch");
  const int n = g.n();
  const double i2h = 1.0 / (2.0 * g.spacing());
  VectorField r = VectorField::zeros(g, VectorBC::None);
  for (int j = 0; j < n; ++j)
    for (int i = 1; i <= n - 1; ++i) {
      const double dwx_dx = (w.x(i + 1, j) - w.x(i - 1, j)) * i2h;
      const double s = (j - 1 >= 0) ? w.x(i, j - 1) : -w.x(i, j);
      const double t = (j + 1 <= n - 1) ? w.x(i, j + 1) : -w.x(i, j);
      const double dwx_dy = (t - s) * i2h;
      const double u2avg =
          0.25 * (u.y(i - 1, j) + u.y(i, j) + u.y(i - 1, j + 1) + u.y(i, j + 1));
      r.x(i, j) = u.x(i, j) * dwx_dx + u2avg * dwx_dy;
    }
  for (int j = 1; j <= n - 1; ++j)
    for (int i = 0; i < n; ++i) {
      const double dwy_dy = (w.y(i, j + 1) - w.y(i, j - 1)) * i2h;
      const double ww = (i - 1 >= 0) ? w.y(i - 1, j) : -w.y(i, j);
      const double we = (i + 1 <= n - 1) ? w.y(i + 1, j) : -w.y(i, j);
      const double dwy_dx = (we - ww) * i2h;
      const double u1avg =
          0.25 * (u.x(i, j - 1) + u.x(i + 1, j - 1) + u.x(i, j) + u.x(i + 1, j));
      r.y(i, j) = u1avg * dwy_dx + u.y(i, j) * dwy_dy;
    }
  return r;
}

/// Lorentz force (∇×b)×b = ω·(-b2, b1) for a magnetic-type field. The node
/// vorticity is brought to faces by 2-point averages along the face, the
/// opposing component by 4-point averages.
inline VectorField lorentz(const StaggeredGrid& g, const VectorField& b) {
  detail::require(b.bc == VectorBC::MagneticNormal,
                  "lorentz: input must be a magnetic-type field");
  detail::check_shape(g, b, "lorentz: field/grid mismatch");
  const int n = g.n();
  const ScalarField w = curl2d(g, b);
  VectorField r = VectorField::zeros(g, VectorBC::None);
  for (int j = 0; j < n; ++j)
    for (int i = 1; i <= n - 1; ++i) {
      const double wavg = 0.5 * (w.a(i, j) + w.a(i, j + 1));
      const double b2avg =
          0.25 * (b.y(i - 1, j) + b.y(i, j) + b.y(i - 1, j + 1) + b.y(i, j + 1));
      r.x(i, j) = -wavg * b2avg;
    }
  for (int j = 1; j <= n - 1; ++j)
    for (int i = 0; i < n; ++i) {
      const double wavg = 0.5 * (w.a(i, j) + w.a(i + 1, j));
      const double b1avg =
          0.25 * (b.x(i, j - 1) + b.x(i + 1, j - 1) + b.x(i, j) + b.x(i + 1, j));
      r.y(i, j) = wavg * b1avg;
    }
  return r;
}

/// Induction nonlinearity ∇×(b×u). The node scalar ψ = b×u is built from
/// 2-point averages of each component and vanishes on boundary nodes; the
/// result is the vector curl of ψ.
inline VectorField induction_nl(const StaggeredGrid& g, const VectorField& b,
                                const VectorField& u) {
  detail::require(b.bc == VectorBC::MagneticNormal && u.bc == VectorBC::Velocity,
                  "induction_nl: need (magnetic, velocity) inputs");
  detail::check_shape(g, b, "induction_nl: field/grid mismatch");
  detail::check_shape(g, u, "induction_nl: field/grid mismatch");
  const int n = g.n();
  ScalarField psi = ScalarField::zeros(g, ScalarLoc::Node);
  for (int j = 1; j <= n - 1; ++j)
    for (int i = 1; i <= n - 1; ++i) {
      const double b1 = 0.5 * (b.x(i, j - 1) + b.x(i, j));
      const double b2 = 0.5 * (b.y(i - 1, j) + b.y(i, j));
      const double u1 = 0.5 * (u.x(i, j - 1) + u.x(i, j));
      const double u2 = 0.5 * (u.y(i - 1, j) + u.y(i, j));
      psi.a(i, j) = b1 * u2 - b2 * u1;
    }
  return curl_scalar(g, psi);
}

/// Weighted L² inner product of two scalar fields. Cells carry full weight
/// h²; nodes carry h² reduced by ½ per boundary direction (¼ at corners).
inline double inner_product(const StaggeredGrid& g, const ScalarField& a,
                            const ScalarField& b) {
  detail::require(a.loc == b.loc, "inner_product: mismatched scalar locations");
  detail::check_shape(g, a, "inner_product: field/grid mismatch");
  detail::check_shape(g, b, "inner_product: field/grid mismatch");
  const int n = g.n();
  const double h2 = g.spacing() * g.spacing();
  double s = 0.0;
  if (a.loc == ScalarLoc::Cell) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) s += a.a(i, j) * b.a(i, j);
    return h2 * s;
  }
  for (int j = 0; j <= n; ++j) {
    const double wj = (j == 0 || j == n) ? 0.5 : 1.0;
    for (int i = 0; i <= n; ++i) {
      const double wi = (i == 0 || i == n) ? 0.5 : 1.0;
      s += wi * wj * a.a(i, j) * b.a(i, j);
    }
  }
  return h2 * s;
}

/// Weighted L² inner product of two face vector fields. Interior faces carry
/// full weight h²; the constrained boundary faces carry h²/2 (they hold
/// boundary values, zero for admissible fields).
inline double inner_product(const StaggeredGrid& g, const VectorField& a,
                            const VectorField& b) {
  detail::check_shape(g, a, "inner_product: field/grid mismatch");
  detail::check_shape(g, b, "inner_product: field/grid mismatch");
  const int n = g.n();
  const double h2 = g.spacing() * g.spacing();
  double s = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= n; ++i) {
      const double wi = (i == 0 || i == n) ? 0.5 : 1.0;
      s += wi * a.x(i, j) * b.x(i, j);
    }
  for (int j = 0; j <= n; ++j) {
    const double wj = (j == 0 || j == n) ? 0.5 : 1.0;
    for (int i = 0; i < n; ++i) s += wj * a.y(i, j) * b.y(i, j);
  }
  return h2 * s;
}

/// L² norm and first-difference (H¹) seminorm of a field.
struct Norms {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double h1() const { return std::sqrt(l2 * l2 + h1_semi * h1_semi); }
};

/// Norms of a scalar field: plain forward differences of stored values.
inline Norms norms(const StaggeredGrid& g, const ScalarField& f) {
  detail::check_shape(g, f, "norms: field/grid mismatch");
  Norms r;
  r.l2 = std::sqrt(inner_product(g, f, f));
  const int rows = static_cast<int>(f.a.rows()), cols = static_cast<int>(f.a.cols());
  double s = 0.0;
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i + 1 < rows; ++i) {
      const double d = f.a(i + 1, j) - f.a(i, j);
      s += d * d;
    }
  for (int j = 0; j + 1 < cols; ++j)
    for (int i = 0; i < rows; ++i) {
      const double d = f.a(i, j + 1) - f.a(i, j);
      s += d * d;
    }
  r.h1_semi = std::sqrt(s);
  return r;
}

/// Norms of a face vector field. The seminorm depends on the BC family:
///   - Velocity: squared first differences plus no-slip wall terms
///     2·(wall-adjacent value)², chosen so that h1_semi(v)² equals
///     ⟨-Δv, v⟩ exactly (the viscous dissipation quadratic form).
///   - MagneticNormal: sqrt(‖curl2d b‖² + ‖divergence b‖²), the magnetic
///     dissipation quadratic form.
///   - None: plain first differences of stored values.
inline Norms norms(const StaggeredGrid& g, const VectorField& v) {
  detail::check_shape(g, v, "norms: field/grid mismatch");
  const int n = g.n();
  Norms r;
  r.l2 = std::sqrt(inner_product(g, v, v));
  if (v.bc == VectorBC::MagneticNormal) {
    const ScalarField w = curl2d(g, v);
    const ScalarField d = divergence(g, v);
    r.h1_semi = std::sqrt(inner_product(g, w, w) + inner_product(g, d, d));
    return r;
  }
  double s = 0.0;
  // x-component: differences along x over all stored pairs.
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double d = v.x(i + 1, j) - v.x(i, j);
      s += d * d;
    }
  // x-component: differences along y; velocity adds wall reflections.
  for (int j = 0; j + 1 < n; ++j)
    for (int i = 0; i <= n; ++i) {
      const double d = v.x(i, j + 1) - v.x(i, j);
      s += d * d;
    }
  if (v.bc == VectorBC::Velocity)
    for (int i = 0; i <= n; ++i)
      s += 2.0 * v.x(i, 0) * v.x(i, 0) + 2.0 * v.x(i, n - 1) * v.x(i, n - 1);
  // y-component: differences along y over all stored pairs.
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double d = v.y(i, j + 1) - v.y(i, j);
      s += d * d;
    }
  // y-component: differences along x; velocity adds wall reflections.
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i + 1 < n; ++i) {
      const double d = v.y(i + 1, j) - v.y(i, j);
      s += d * d;
    }
  if (v.bc == VectorBC::Velocity)
    for (int j = 0; j <= n; ++j)
      s += 2.0 * v.y(0, j) * v.y(0, j) + 2.0 * v.y(n - 1, j) * v.y(n - 1, j);
  r.h1_semi = std::sqrt(s);
  return r;
}

/// Discrete mean of a cell scalar (uniform weights).
inline double cell_mean(const StaggeredGrid& g, const ScalarField& p) {
  detail::require(p.loc == ScalarLoc::Cell, "cell_mean: input must live at cell centers");
  detail::check_shape(g, p, "cell_mean: field/grid mismatch");
  double s = 0.0;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) s += p.a(i, j);
  return s / (static_cast<double>(g.n()) * g.n());
}

}  // namespace savmhd
