/// @file fields.hpp
/// @brief Staggered (MAC) grid on the unit square and the field containers
///        used throughout the solver.
///
/// Layout on an n×n cell grid with spacing h = 1/n:
///   - x-face scalars (vector x-components):  (n+1)×n values at (i·h, (j+½)h)
///   - y-face scalars (vector y-components):  n×(n+1) values at ((i+½)h, j·h)
///   - cell scalars (pressure, divergence):   n×n     values at ((i+½)h, (j+½)h)
///   - node scalars (vorticity):              (n+1)×(n+1) values at (i·h, j·h)
///
/// Arrays are indexed (i, j) with i the x-index; storage is column-major so
/// loops iterate j outer, i inner.

#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace savmhd {

/// Uniform staggered grid on (0,1)². Only the resolution is stored; the
/// spacing is recomputed as 1/n on demand so it can never drift.
class StaggeredGrid {
 public:
  static constexpr int kMinCells = 4;  ///< coarsest grid the stencils support

  explicit StaggeredGrid(int n) : n_(n) {
    if (n < kMinCells)
      throw std::invalid_argument("StaggeredGrid: need n >= 4 cells per side");
  }

  int n() const { return n_; }
  double spacing() const { return 1.0 / n_; }

  // Coordinates of the four sampling families.
  double face_coord(int i) const { return i * spacing(); }           ///< i·h (faces, nodes)
  double center_coord(int i) const { return (i + 0.5) * spacing(); } ///< (i+½)·h (cells)

  bool operator==(const StaggeredGrid& o) const { return n_ == o.n_; }
  bool operator!=(const StaggeredGrid& o) const { return n_ != o.n_; }

 private:
  int n_;
};

/// Where a scalar field lives.
enum class ScalarLoc { Cell, Node };

/// Boundary-condition family of a face vector field. It decides how ghost
/// values are formed next to tangential walls and which seminorm applies:
///   - Velocity: no-slip; normal boundary faces are zero and tangential wall
///     values reflect (ghost = -interior).
///   - MagneticNormal: perfectly conducting wall; normal boundary faces are
///     zero and the boundary vorticity vanishes (no ghost reflection).
///   - None: plain face data (right-hand sides, operator outputs).
enum class VectorBC { Velocity, MagneticNormal, None };

/// Scalar field at cell centers or grid nodes.
struct ScalarField {
  ScalarLoc loc = ScalarLoc::Cell;
  Eigen::ArrayXXd a;

  static ScalarField zeros(const StaggeredGrid& g, ScalarLoc loc) {
    ScalarField f;
    f.loc = loc;
    const int m = (loc == ScalarLoc::Cell) ? g.n() : g.n() + 1;
    f.a = Eigen::ArrayXXd::Zero(m, m);
    return f;
  }
};

/// Face-centred vector field: x on vertical faces, y on horizontal faces.
struct VectorField {
  VectorBC bc = VectorBC::None;
  Eigen::ArrayXXd x;  ///< (n+1) × n
  Eigen::ArrayXXd y;  ///< n × (n+1)

  static VectorField zeros(const StaggeredGrid& g, VectorBC bc) {
    VectorField f;
    f.bc = bc;
    f.x = Eigen::ArrayXXd::Zero(g.n() + 1, g.n());
    f.y = Eigen::ArrayXXd::Zero(g.n(), g.n() + 1);
    return f;
  }
};

/// Deduce the grid a field was built on (arrays carry their own sizes).
inline StaggeredGrid grid_of(const ScalarField& f) {
  const int m = static_cast<int>(f.a.rows());
  return StaggeredGrid(f.loc == ScalarLoc::Cell ? m : m - 1);
}
inline StaggeredGrid grid_of(const VectorField& f) {
  return StaggeredGrid(static_cast<int>(f.x.cols()));
}

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("savmhd: ") + what);
}

inline void check_shape(const StaggeredGrid& g, const ScalarField& f, const char* who) {
  const int m = (f.loc == ScalarLoc::Cell) ? g.n() : g.n() + 1;
  require(f.a.rows() == m && f.a.cols() == m, who);
}

inline void check_shape(const StaggeredGrid& g, const VectorField& f, const char* who) {
  require(f.x.rows() == g.n() + 1 && f.x.cols() == g.n() &&
              f.y.rows() == g.n() && f.y.cols() == g.n() + 1,
          who);
}

}  // namespace detail

/// Zero the constrained normal boundary faces (x at i∈{0,n}, y at j∈{0,n}).
/// Both velocity and magnetic fields share this constraint set.
inline void zero_normal_boundary(VectorField& v) {
  const Eigen::Index nx = v.x.rows(), ny = v.y.cols();
  v.x.row(0).setZero();
  v.x.row(nx - 1).setZero();
  v.y.col(0).setZero();
  v.y.col(ny - 1).setZero();
}

/// True when every constrained normal boundary face is exactly zero.
inline bool has_zero_normal_boundary(const VectorField& v) {
  const Eigen::Index nx = v.x.rows(), ny = v.y.cols();
  return (v.x.row(0) == 0.0).all() && (v.x.row(nx - 1) == 0.0).all() &&
         (v.y.col(0) == 0.0).all() && (v.y.col(ny - 1) == 0.0).all();
}

/// Sample a scalar function at cell centers.
template <class F>
ScalarField sample_cells(const StaggeredGrid& g, F&& f) {
  ScalarField s = ScalarField::zeros(g, ScalarLoc::Cell);
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) s.a(i, j) = f(g.center_coord(i), g.center_coord(j));
  return s;
}

/// Sample a scalar function at grid nodes.
template <class F>
ScalarField sample_nodes(const StaggeredGrid& g, F&& f) {
  ScalarField s = ScalarField::zeros(g, ScalarLoc::Node);
  for (int j = 0; j <= g.n(); ++j)
    for (int i = 0; i <= g.n(); ++i) s.a(i, j) = f(g.face_coord(i), g.face_coord(j));
  return s;
}

/// Sample a vector function (f1, f2) at the staggered face centers.
template <class F1, class F2>
VectorField sample_faces(const StaggeredGrid& g, VectorBC bc, F1&& f1, F2&& f2) {
  VectorField v = VectorField::zeros(g, bc);
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i <= g.n(); ++i) v.x(i, j) = f1(g.face_coord(i), g.center_coord(j));
  for (int j = 0; j <= g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) v.y(i, j) = f2(g.center_coord(i), g.face_coord(j));
  return v;
}

/// a*X + b*Y, keeping X's boundary-condition tag.
inline VectorField lincomb(double a, const VectorField& X, double b, const VectorField& Y) {
  detail::require(X.x.rows() == Y.x.rows() && X.x.cols() == Y.x.cols() &&
                      X.y.rows() == Y.y.rows() && X.y.cols() == Y.y.cols(),
                  "lincomb: mismatched field shapes");
  VectorField r;
  r.bc = X.bc;
  r.x = a * X.x + b * Y.x;
  r.y = a * X.y + b * Y.y;
  return r;
}

inline ScalarField lincomb(double a, const ScalarField& X, double b, const ScalarField& Y) {
  detail::require(X.loc == Y.loc && X.a.rows() == Y.a.rows() && X.a.cols() == Y.a.cols(),
                  "lincomb: mismatched field shapes");
  ScalarField r;
  r.loc = X.loc;
  r.a = a * X.a + b * Y.a;
  return r;
}

}  // namespace savmhd
