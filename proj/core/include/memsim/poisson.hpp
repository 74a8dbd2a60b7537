#pragma once

#include <array>
#include <memory>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "memsim/grid.hpp"

namespace memsim {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Discrete operator for  lambda2 * Laplace(u) = g  with Dirichlet data on the
/// boundary faces tagged in `dirichlet` and zero normal derivative elsewhere.
///
/// The matrix is the symmetric positive definite five-point stiffness K built
/// from face transmissibilities |face| / distance. The Dirichlet rows use the
/// half-cell distance to the face midpoint, so the discrete gradient and
/// divergence of grid.hpp are negative adjoints of each other with respect to
/// face_inner and integrate_cells. Solves go through one shared sparse
/// Cholesky factorization followed by a step of iterative refinement.
class EllipticOperator {
 public:
  EllipticOperator(std::shared_ptr<const Mesh> mesh, double lambda2, TagSet dirichlet);

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  double lambda2() const { return lambda2_; }
  TagSet dirichlet() const { return dirichlet_; }
  const SparseMatrix& stiffness() const { return stiffness_; }

  /// Solution of lambda2 * Laplace(u) = rhs, u = boundary on Dirichlet faces.
  CellField solve(const CellField& rhs, const FaceField& boundary) const;

  /// Same as solve() but with zero Dirichlet data.
  CellField solve_homogeneous(const CellField& rhs) const;

  /// Relative residual tolerance enforced after every solve.
  static constexpr double kResidualTol = 1e-10;

 private:
  struct Factorization;

  Eigen::VectorXd load(const CellField& rhs, const FaceField* boundary) const;
  Eigen::VectorXd solve_system(const Eigen::VectorXd& b) const;

  std::shared_ptr<const Mesh> mesh_;
  double lambda2_;
  TagSet dirichlet_;
  SparseMatrix stiffness_;
  std::shared_ptr<const Factorization> factor_;
};

/// lambda2 * Laplace(V) = n - p - D + A, V = vbar on the terminals.
CellField solve_poisson(const EllipticOperator& op, const CellField& n, const CellField& p,
                        const CellField& D, const CellField& doping, const FaceField& vbar);

/// Stationary potential: lambda2 * Laplace(V_A) = A, V_A = V_bi trace on the terminals.
CellField solve_stationary(const EllipticOperator& op, const CellField& doping,
                           const FaceField& vbi_trace);

/// Overload taking a cell field for V_bi; the trace is the owner-cell value.
CellField solve_stationary_from_cells(const EllipticOperator& op, const CellField& doping,
                                      const CellField& vbi);

/// Discrete harmonic weight: 1 on terminal `terminal` (1 or 2), 0 on the other one.
CellField solve_harmonic_weight(const EllipticOperator& op, int terminal);

struct GreenResult {
  CellField value;
  FaceField gradient;
};

/// Green operator: lambda2 * Laplace(f) = g, f = 0 on the terminals. Returns f and its face gradient.
GreenResult green_apply(const EllipticOperator& op, const CellField& g);

/// Face-indexed trace of a cell field on the boundary (owner-cell value).
FaceField boundary_trace(const Mesh& mesh, const CellField& cells);

struct PotentialDecomposition {
  CellField stationary;                 // V_A
  std::array<CellField, 2> weights;     // w_1, w_2
  std::array<FaceField, 2> weight_gradients;
  Eigen::Matrix2d M = Eigen::Matrix2d::Zero();
};

/// Builds V_A, the harmonic weights and the terminal capacitance matrix M.
PotentialDecomposition decompose_potential(const EllipticOperator& op, const CellField& doping,
                                           const FaceField& vbi_trace);

/// V = V_A + w_1 u_D^1 + w_2 u_D^2 + correction, with correction = L[n - p - D].
CellField superpose_potential(const PotentialDecomposition& decomp, const Eigen::Vector2d& u_D,
                              const CellField& correction);

}  // namespace memsim
