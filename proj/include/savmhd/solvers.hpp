/// @file solvers.hpp
/// @brief Factored constant-coefficient linear solves reused across time
///        steps: the coupled velocity–pressure (Stokes-type) system and the
///        SPD magnetic system.
///
/// Both solvers assemble sparse matrices whose action matches the discrete
/// operators in operators.hpp stencil-for-stencil; every solve re-applies
/// those operators to verify a scale-relative residual contract of 1e-11
/// and throws SolverFailure when it is missed. The direct factorizations
/// used here (UMFPACK LU, Eigen simplicial LDLT) land near 1e-15, so the
/// check is a tripwire for assembly bugs rather than a tuning knob.

#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/UmfPackSupport>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "savmhd/errors.hpp"
#include "savmhd/fields.hpp"
#include "savmhd/operators.hpp"

namespace savmhd {

/// Scale-relative residual ceiling every linear solve must meet.
inline constexpr double kSolveResidualTol = 1e-11;

namespace detail {

/// Index map over the interior (unknown) faces of a grid. The constrained
/// boundary faces (x at i∈{0,n}, y at j∈{0,n}) carry boundary values and
/// are excluded from the linear systems.
struct FaceIndex {
  int n;
  explicit FaceIndex(const StaggeredGrid& g) : n(g.n()) {}
  int count_x() const { return (n - 1) * n; }
  int count_y() const { return n * (n - 1); }
  int count() const { return count_x() + count_y(); }
  int x(int i, int j) const { return (i - 1) * n + j; }                 // i in [1,n-1]
  int y(int i, int j) const { return count_x() + i * (n - 1) + (j - 1); }  // j in [1,n-1]
};

inline Eigen::VectorXd gather_faces(const FaceIndex& ix, const VectorField& f) {
  Eigen::VectorXd v(ix.count());
  for (int j = 0; j < ix.n; ++j)
    for (int i = 1; i <= ix.n - 1; ++i) v[ix.x(i, j)] = f.x(i, j);
  for (int j = 1; j <= ix.n - 1; ++j)
    for (int i = 0; i < ix.n; ++i) v[ix.y(i, j)] = f.y(i, j);
  return v;
}

inline void scatter_faces(const FaceIndex& ix, const Eigen::VectorXd& v, VectorField& f) {
  for (int j = 0; j < ix.n; ++j)
    for (int i = 1; i <= ix.n - 1; ++i) f.x(i, j) = v[ix.x(i, j)];
  for (int j = 1; j <= ix.n - 1; ++j)
    for (int i = 0; i < ix.n; ++i) f.y(i, j) = v[ix.y(i, j)];
}

/// Triplets of sigma*I + nu*(-Δ) on interior faces, mirroring
/// laplacian_velocity (stored normal neighbours, tangential ghost
/// reflection: wall-adjacent diagonal picks up an extra 1/h²).
inline void helmholtz_triplets(const StaggeredGrid& g, const FaceIndex& ix, double sigma,
                               double nu, std::vector<Eigen::Triplet<double>>& T,
                               int row0 = 0, int col0 = 0) {
  const int n = g.n();
  const double ih2 = 1.0 / (g.spacing() * g.spacing());
  for (int j = 0; j < n; ++j)
    for (int i = 1; i <= n - 1; ++i) {
      const int r = row0 + ix.x(i, j);
      double diag = sigma + 4.0 * nu * ih2;
      if (i - 1 >= 1) T.emplace_back(r, col0 + ix.x(i - 1, j), -nu * ih2);
      if (i + 1 <= n - 1) T.emplace_back(r, col0 + ix.x(i + 1, j), -nu * ih2);
      if (j - 1 >= 0) T.emplace_back(r, col0 + ix.x(i, j - 1), -nu * ih2);
      else diag += nu * ih2;
      if (j + 1 <= n - 1) T.emplace_back(r, col0 + ix.x(i, j + 1), -nu * ih2);
      else diag += nu * ih2;
      T.emplace_back(r, col0 + ix.x(i, j), diag);
    }
  for (int j = 1; j <= n - 1; ++j)
    for (int i = 0; i < n; ++i) {
      const int r = row0 + ix.y(i, j);
      double diag = sigma + 4.0 * nu * ih2;
      if (j - 1 >= 1) T.emplace_back(r, col0 + ix.y(i, j - 1), -nu * ih2);
      if (j + 1 <= n - 1) T.emplace_back(r, col0 + ix.y(i, j + 1), -nu * ih2);
      if (i - 1 >= 0) T.emplace_back(r, col0 + ix.y(i - 1, j), -nu * ih2);
      else diag += nu * ih2;
      if (i + 1 <= n - 1) T.emplace_back(r, col0 + ix.y(i + 1, j), -nu * ih2);
      else diag += nu * ih2;
      T.emplace_back(r, col0 + ix.y(i, j), diag);
    }
}

}  // namespace detail

/// Coupled velocity–pressure solve: given sigma > 0, nu > 0, solve
///   sigma·u - nu·Δu + ∇p = f,   ∇·u = 0,   mean(p) = 0,
/// with no-slip velocity. The factorization is built once and reused; each
/// solve costs two sparse triangular sweeps.
///
/// The zero-mean pressure constraint is imposed by pinning one cell during
/// the solve and re-centering afterwards; the discrete divergence of any
/// admissible field sums to zero over the cells, so the pinned system has
/// the same velocity solution as the constrained one.
class StokesSolver {
 public:
  StokesSolver(const StaggeredGrid& g, double sigma, double nu)
      : grid_(g), ix_(g), sigma_(sigma), nu_(nu) {
    if (!(sigma > 0.0) || !(nu > 0.0))
      throw std::invalid_argument("StokesSolver: need sigma > 0 and nu > 0");
    assemble();
  }

  struct Result {
    VectorField u;   ///< velocity, admissible (zero normal boundary faces)
    ScalarField p;   ///< cell pressure, discrete mean zero
    double residual_momentum = 0.0;    ///< relative to ‖f‖ + sigma‖u‖
    double residual_divergence = 0.0;  ///< relative to ‖f‖ + sigma‖u‖
  };

  /// Solve for the given face right-hand side (interior entries are read;
  /// constrained boundary entries are ignored).
  Result solve(const VectorField& f) const {
    detail::check_shape(grid_, f, "StokesSolver::solve: field/grid mismatch");
    const int nu_dof = ix_.count(), np = grid_.n() * grid_.n();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu_dof + np);
    rhs.head(nu_dof) = detail::gather_faces(ix_, f);

    Eigen::VectorXd sol = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success)
      throw SolverFailure("StokesSolver: back-substitution failed");

    Result r;
    r.u = VectorField::zeros(grid_, VectorBC::Velocity);
    detail::scatter_faces(ix_, sol.head(nu_dof), r.u);
    r.p = ScalarField::zeros(grid_, ScalarLoc::Cell);
    for (int j = 0; j < grid_.n(); ++j)
      for (int i = 0; i < grid_.n(); ++i) r.p.a(i, j) = sol[nu_dof + cell_id(i, j)];
    r.p.a -= cell_mean(grid_, r.p);

    check_residual(f, r);
    return r;
  }

  const StaggeredGrid& grid() const { return grid_; }
  double sigma() const { return sigma_; }
  double nu() const { return nu_; }

 private:
  int cell_id(int i, int j) const { return i * grid_.n() + j; }

  void assemble() {
    const int n = grid_.n();
    const double ih = 1.0 / grid_.spacing();
    const int nu_dof = ix_.count(), np = n * n;
    const int pin = nu_dof + cell_id(0, 0);
    std::vector<Eigen::Triplet<double>> T;
    T.reserve(static_cast<size_t>(9) * (nu_dof + np));
    detail::helmholtz_triplets(grid_, ix_, sigma_, nu_, T);
    // Pressure gradient columns (pinned cell column dropped).
    for (int j = 0; j < n; ++j)
      for (int i = 1; i <= n - 1; ++i) {
        const int r = ix_.x(i, j);
        if (nu_dof + cell_id(i, j) != pin) T.emplace_back(r, nu_dof + cell_id(i, j), ih);
        if (nu_dof + cell_id(i - 1, j) != pin)
          T.emplace_back(r, nu_dof + cell_id(i - 1, j), -ih);
      }
    for (int j = 1; j <= n - 1; ++j)
      for (int i = 0; i < n; ++i) {
        const int r = ix_.y(i, j);
        if (nu_dof + cell_id(i, j) != pin) T.emplace_back(r, nu_dof + cell_id(i, j), ih);
        if (nu_dof + cell_id(i, j - 1) != pin)
          T.emplace_back(r, nu_dof + cell_id(i, j - 1), -ih);
      }
    // Continuity rows -(∇·u) = 0; the pinned cell's row becomes p = 0.
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int r = nu_dof + cell_id(i, j);
        if (r == pin) {
          T.emplace_back(r, r, 1.0);
          continue;
        }
        if (i + 1 <= n - 1) T.emplace_back(r, ix_.x(i + 1, j), -ih);
        if (i >= 1) T.emplace_back(r, ix_.x(i, j), ih);
        if (j + 1 <= n - 1) T.emplace_back(r, ix_.y(i, j + 1), -ih);
        if (j >= 1) T.emplace_back(r, ix_.y(i, j), ih);
      }
    // The factorization wrapper keeps a reference to the matrix (UMFPACK
    // consults it during solves), so it must live as long as the solver.
    A_.resize(nu_dof + np, nu_dof + np);
    A_.setFromTriplets(T.begin(), T.end());
    A_.makeCompressed();
    lu_.compute(A_);
    if (lu_.info() != Eigen::Success)
      throw SolverFailure("StokesSolver: factorization failed at n=" +
                          std::to_string(grid_.n()));
  }

  void check_residual(const VectorField& f, Result& r) const {
    const VectorField lap = laplacian_velocity(grid_, r.u);
    const VectorField gp = gradient(grid_, r.p);
    VectorField res = VectorField::zeros(grid_, VectorBC::None);
    const int n = grid_.n();
    for (int j = 0; j < n; ++j)
      for (int i = 1; i <= n - 1; ++i)
        res.x(i, j) = sigma_ * r.u.x(i, j) - nu_ * lap.x(i, j) + gp.x(i, j) - f.x(i, j);
    for (int j = 1; j <= n - 1; ++j)
      for (int i = 0; i < n; ++i)
        res.y(i, j) = sigma_ * r.u.y(i, j) - nu_ * lap.y(i, j) + gp.y(i, j) - f.y(i, j);
    const double nf = std::sqrt(inner_product(grid_, f, f));
    const double nuu = std::sqrt(inner_product(grid_, r.u, r.u));
    const double scale = nf + sigma_ * nuu + 1e-300;
    r.residual_momentum = std::sqrt(inner_product(grid_, res, res)) / scale;
    const ScalarField div = divergence(grid_, r.u);
    r.residual_divergence = std::sqrt(inner_product(grid_, div, div)) / scale;
    if (!(r.residual_momentum <= kSolveResidualTol) ||
        !(r.residual_divergence <= kSolveResidualTol))
      throw SolverFailure("StokesSolver: residual contract missed (momentum " +
                          std::to_string(r.residual_momentum) + ", divergence " +
                          std::to_string(r.residual_divergence) + ")");
  }

  StaggeredGrid grid_;
  detail::FaceIndex ix_;
  double sigma_, nu_;
  Eigen::SparseMatrix<double> A_;
  Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu_;
};

/// SPD magnetic solve: given sigma > 0, eta > 0, solve
///   sigma·b + eta·(∇×(∇×b) - ∇(∇·b)) = f
/// with zero normal boundary components and zero boundary vorticity. The
/// operator is assembled as sigma·I + eta·(CᵀC + DᵀD) from the reduced curl
/// and divergence matrices, which is symmetric positive definite; positive
/// definiteness is probed at build time on a deterministic random vector.
class MagneticSolver {
 public:
  MagneticSolver(const StaggeredGrid& g, double sigma, double eta)
      : grid_(g), ix_(g), sigma_(sigma), eta_(eta) {
    if (!(sigma > 0.0) || !(eta > 0.0))
      throw std::invalid_argument("MagneticSolver: need sigma > 0 and eta > 0");
    assemble();
  }

  struct Result {
    VectorField b;            ///< magnetic field, admissible
    double residual = 0.0;    ///< relative to ‖f‖ + sigma‖b‖
  };

  Result solve(const VectorField& f) const {
    detail::check_shape(grid_, f, "MagneticSolver::solve: field/grid mismatch");
    Eigen::VectorXd rhs = detail::gather_faces(ix_, f);
    Eigen::VectorXd sol = ldlt_.solve(rhs);
    if (ldlt_.info() != Eigen::Success)
      throw SolverFailure("MagneticSolver: back-substitution failed");
    Result r;
    r.b = VectorField::zeros(grid_, VectorBC::MagneticNormal);
    detail::scatter_faces(ix_, sol, r.b);
    check_residual(f, r);
    return r;
  }

  const StaggeredGrid& grid() const { return grid_; }
  double sigma() const { return sigma_; }
  double eta() const { return eta_; }

 private:
  void assemble() {
    const int n = grid_.n();
    const double ih = 1.0 / grid_.spacing();
    const int nb = ix_.count();
    // Reduced curl: interior nodes × interior faces.
    std::vector<Eigen::Triplet<double>> TC;
    TC.reserve(static_cast<size_t>(4) * (n - 1) * (n - 1));
    auto node_id = [n](int i, int j) { return (i - 1) * (n - 1) + (j - 1); };
    for (int j = 1; j <= n - 1; ++j)
      for (int i = 1; i <= n - 1; ++i) {
        const int r = node_id(i, j);
        TC.emplace_back(r, ix_.y(i, j), ih);
        TC.emplace_back(r, ix_.y(i - 1, j), -ih);
        TC.emplace_back(r, ix_.x(i, j), -ih);
        TC.emplace_back(r, ix_.x(i, j - 1), ih);
      }
    Eigen::SparseMatrix<double> C((n - 1) * (n - 1), nb);
    C.setFromTriplets(TC.begin(), TC.end());
    // Reduced divergence: cells × interior faces.
    std::vector<Eigen::Triplet<double>> TD;
    TD.reserve(static_cast<size_t>(4) * n * n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int r = i * n + j;
        if (i + 1 <= n - 1) TD.emplace_back(r, ix_.x(i + 1, j), ih);
        if (i >= 1) TD.emplace_back(r, ix_.x(i, j), -ih);
        if (j + 1 <= n - 1) TD.emplace_back(r, ix_.y(i, j + 1), ih);
        if (j >= 1) TD.emplace_back(r, ix_.y(i, j), -ih);
      }
    Eigen::SparseMatrix<double> D(n * n, nb);
    D.setFromTriplets(TD.begin(), TD.end());

    Eigen::SparseMatrix<double> I(nb, nb);
    I.setIdentity();
    Eigen::SparseMatrix<double> A = sigma_ * I +
                                    eta_ * Eigen::SparseMatrix<double>(
                                               Eigen::SparseMatrix<double>(C.transpose() * C) +
                                               Eigen::SparseMatrix<double>(D.transpose() * D));
    A.makeCompressed();

    // Positive-definiteness probe on a deterministic random direction.
    std::mt19937_64 rng(0x5a17);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Eigen::VectorXd v(nb);
    for (int k = 0; k < nb; ++k) v[k] = unit(rng);
    if (!(v.dot(A * v) > 0.0))
      throw SolverFailure("MagneticSolver: operator failed SPD probe");

    ldlt_.compute(A);
    if (ldlt_.info() != Eigen::Success)
      throw SolverFailure("MagneticSolver: factorization failed at n=" +
                          std::to_string(grid_.n()));
  }

  void check_residual(const VectorField& f, Result& r) const {
    const VectorField cc = curl_scalar(grid_, curl2d(grid_, r.b));
    const VectorField gd = gradient(grid_, divergence(grid_, r.b));
    VectorField res = VectorField::zeros(grid_, VectorBC::None);
    const int n = grid_.n();
    for (int j = 0; j < n; ++j)
      for (int i = 1; i <= n - 1; ++i)
        res.x(i, j) =
            sigma_ * r.b.x(i, j) + eta_ * (cc.x(i, j) - gd.x(i, j)) - f.x(i, j);
    for (int j = 1; j <= n - 1; ++j)
      for (int i = 0; i < n; ++i)
        res.y(i, j) =
            sigma_ * r.b.y(i, j) + eta_ * (cc.y(i, j) - gd.y(i, j)) - f.y(i, j);
    const double nf = std::sqrt(inner_product(grid_, f, f));
    const double nb = std::sqrt(inner_product(grid_, r.b, r.b));
    r.residual = std::sqrt(inner_product(grid_, res, res)) / (nf + sigma_ * nb + 1e-300);
    if (!(r.residual <= kSolveResidualTol))
      throw SolverFailure("MagneticSolver: residual contract missed (" +
                          std::to_string(r.residual) + ")");
  }

  StaggeredGrid grid_;
  detail::FaceIndex ix_;
  double sigma_, eta_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

}  // namespace savmhd
