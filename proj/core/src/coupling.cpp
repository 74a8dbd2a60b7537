#include "memsim/coupling.hpp"

#include <cmath>

#include "memsim/errors.hpp"

namespace memsim {

BuiltInPotential built_in_potential(const Mesh& mesh, const CellField& doping, double intrinsic) {
  if (!(intrinsic > 0.0)) throw ConfigError("intrinsic density must be positive");
  if (doping.size() != mesh.num_cells()) throw ConfigError("doping size does not match the mesh");
  BuiltInPotential v;
  v.intrinsic = intrinsic;
  v.cells = doping.unaryExpr([intrinsic](double a) { return std::asinh(a / (2.0 * intrinsic)); });
  v.trace = boundary_trace(mesh, v.cells);
  return v;
}

Eigen::Matrix2d compute_M(const Mesh& mesh, const FaceField& grad_w1, const FaceField& grad_w2,
                          double lambda2) {
  Eigen::Matrix2d M;
  M(0, 0) = lambda2 * face_inner(mesh, grad_w1, grad_w1);
  M(1, 1) = lambda2 * face_inner(mesh, grad_w2, grad_w2);
  M(0, 1) = M(1, 0) = 0.5 * lambda2 *
                      (face_inner(mesh, grad_w1, grad_w2) + face_inner(mesh, grad_w2, grad_w1));
  return M;
}

CouplingOperators::CouplingOperators(std::shared_ptr<const EllipticOperator> op,
                                     const CellField& doping, BuiltInPotential vbi)
    : op_(std::move(op)), vbi_(std::move(vbi)) {
  if (!op_) throw ConfigError("coupling needs an elliptic operator");
  if (!(op_->dirichlet() == TagSet::terminals())) {
    throw ConfigError("coupling operator must use Dirichlet data on both terminals only");
  }
  decomp_ = decompose_potential(*op_, doping, vbi_.trace);
}

Eigen::Vector2d CouplingOperators::script_I(const FaceField& J_total) const {
  const Mesh& m = mesh();
  if (J_total.size() != m.num_faces()) throw ConfigError("current field size mismatch");
  const GreenResult green = green_apply(*op_, divergence(m, J_total));
  const FaceField K = J_total - lambda2() * green.gradient;
  return {-face_inner(m, decomp_.weight_gradients[0], K),
          -face_inner(m, decomp_.weight_gradients[1], K)};
}

FaceField CouplingOperators::boundary_potential(const Eigen::Vector2d& u_D) const {
  FaceField v = terminal_values(mesh(), u_D[0], u_D[1]);
  const Mesh& m = mesh();
  for (int f = m.first_boundary_face(); f < m.num_faces(); ++f) {
    const auto tag = m.face(f).tag;
    if (tag == BoundaryTag::D1 || tag == BoundaryTag::D2) v[f] += vbi_.trace[f];
  }
  return v;
}

CellField CouplingOperators::potential_lift(const Eigen::Vector2d& u_D) const {
  return vbi_.cells + u_D[0] * decomp_.weights[0] + u_D[1] * decomp_.weights[1];
}

Eigen::Vector2d terminal_currents(const Eigen::Vector2d& script_I, const Eigen::Matrix2d& M,
                                  const Eigen::Vector2d& dudt_D) {
  return M * dudt_D + script_I;
}

Eigen::VectorXd compute_F(const Eigen::Vector2d& script_I, const DecoupledSystem& sys) {
  return sys.embed_terminals(-script_I);
}

FaceField boundary_potential(const CouplingOperators& ops, const DecoupledSystem& sys,
                             const Eigen::VectorXd& y) {
  return ops.boundary_potential(sys.u_D(y));
}

Eigen::Vector2d terminal_voltage_rate(const DecoupledSystem& sys, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& F, const Eigen::VectorXd& s) {
  return sys.u_D(sys.rhs(y, F, s));
}

Eigen::Vector2d drive_mode(const DriveWaveform& drive, double t) {
  return {drive.terminal1.value(t), drive.terminal2.value(t)};
}

Eigen::Vector2d drive_rate(const DriveWaveform& drive, double t) {
  return {drive.terminal1.derivative(t), drive.terminal2.derivative(t)};
}

}  // namespace memsim
