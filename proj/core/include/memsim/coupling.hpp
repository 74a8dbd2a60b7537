#pragma once

#include <memory>

#include <Eigen/Core>

#include "memsim/grid.hpp"
#include "memsim/network.hpp"
#include "memsim/poisson.hpp"

namespace memsim {

/// V_bi = arcsinh(A / (2 n_i)) on cells, with its owner-cell trace on boundary faces.
struct BuiltInPotential {
  CellField cells;
  FaceField trace;
  double intrinsic = 1.0;
};

BuiltInPotential built_in_potential(const Mesh& mesh, const CellField& doping, double intrinsic);

/// M_jk = lambda2 <grad w_j, grad w_k>, symmetrized.
Eigen::Matrix2d compute_M(const Mesh& mesh, const FaceField& grad_w1, const FaceField& grad_w2,
                          double lambda2);

/// Operators linking the device to the two terminals: harmonic weights, the
/// capacitance matrix M and the Green operator with homogeneous terminal data.
class CouplingOperators {
 public:
  CouplingOperators(std::shared_ptr<const EllipticOperator> op, const CellField& doping,
                    BuiltInPotential vbi);

  const EllipticOperator& op() const { return *op_; }
  const Mesh& mesh() const { return op_->mesh(); }
  double lambda2() const { return op_->lambda2(); }
  const PotentialDecomposition& decomposition() const { return decomp_; }
  const Eigen::Matrix2d& M() const { return decomp_.M; }
  const CellField& stationary() const { return decomp_.stationary; }
  const BuiltInPotential& built_in() const { return vbi_; }

  /// script_I_j = -<grad w_j, J - lambda2 grad L[div J]>.
  Eigen::Vector2d script_I(const FaceField& J_total) const;

  /// Terminal potential: V_bi trace + u_D^j on faces of terminal j.
  FaceField boundary_potential(const Eigen::Vector2d& u_D) const;

  /// Volumetric extension V_bi + w_1 u_D^1 + w_2 u_D^2.
  CellField potential_lift(const Eigen::Vector2d& u_D) const;

 private:
  std::shared_ptr<const EllipticOperator> op_;
  BuiltInPotential vbi_;
  PotentialDecomposition decomp_;
};

/// I_D = M du_D/dt + script_I.
Eigen::Vector2d terminal_currents(const Eigen::Vector2d& script_I, const Eigen::Matrix2d& M,
                                  const Eigen::Vector2d& dudt_D);

/// F = -pi^T S script_I.
Eigen::VectorXd compute_F(const Eigen::Vector2d& script_I, const DecoupledSystem& sys);

/// V-bar from the differential network state, u_D = S^T pi y.
FaceField boundary_potential(const CouplingOperators& ops, const DecoupledSystem& sys,
                             const Eigen::VectorXd& y);

/// du_D/dt = S^T pi P E_1^{-1}(A_1 y + F + s), from the network right-hand side.
Eigen::Vector2d terminal_voltage_rate(const DecoupledSystem& sys, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& F, const Eigen::VectorXd& s);

/// Open-loop terminal voltages. Terminal 2 is grounded unless given.
struct DriveWaveform {
  Waveform terminal1;
  Waveform terminal2 = Waveform::dc(0.0);
};

Eigen::Vector2d drive_mode(const DriveWaveform& drive, double t);
Eigen::Vector2d drive_rate(const DriveWaveform& drive, double t);

}  // namespace memsim
