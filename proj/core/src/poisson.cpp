#include "memsim/poisson.hpp"

#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "memsim/errors.hpp"

namespace memsim {

struct EllipticOperator::Factorization {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  bool direct = true;
};

EllipticOperator::EllipticOperator(std::shared_ptr<const Mesh> mesh, double lambda2,
                                   TagSet dirichlet)
    : mesh_(std::move(mesh)), lambda2_(lambda2), dirichlet_(dirichlet) {
  if (!mesh_) throw ConfigError("elliptic operator needs a mesh");
  if (!(lambda2_ > 0.0)) throw ConfigError("lambda2 must be positive");
  if (dirichlet_.empty()) {
    throw ConfigError("pure Neumann operator is singular: no Dirichlet boundary tags given");
  }
  bool any = false;
  for (int f = mesh_->first_boundary_face(); f < mesh_->num_faces(); ++f) {
    any = any || dirichlet_.contains(mesh_->face(f).tag);
  }
  if (!any) {
    throw ConfigError("pure Neumann operator is singular: Dirichlet tags match no boundary face");
  }

  const int nc = mesh_->num_cells();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(5 * nc));
  for (const Face& face : mesh_->faces()) {
    const double t = face.length / face.distance;
    if (!face.is_boundary()) {
      trip.emplace_back(face.owner, face.owner, t);
      trip.emplace_back(face.neighbor, face.neighbor, t);
      trip.emplace_back(face.owner, face.neighbor, -t);
      trip.emplace_back(face.neighbor, face.owner, -t);
    } else if (dirichlet_.contains(face.tag)) {
      trip.emplace_back(face.owner, face.owner, t);
    }
  }
  stiffness_.resize(nc, nc);
  stiffness_.setFromTriplets(trip.begin(), trip.end());
  stiffness_.makeCompressed();

  auto factor = std::make_shared<Factorization>();
  factor->ldlt.compute(stiffness_);
  if (factor->ldlt.info() != Eigen::Success) factor->direct = false;
  factor_ = std::move(factor);
}

Eigen::VectorXd EllipticOperator::load(const CellField& rhs, const FaceField* boundary) const {
  if (rhs.size() != mesh_->num_cells()) throw ConfigError("right-hand side size mismatch");
  Eigen::VectorXd b = -rhs * (mesh_->cell_area() / lambda2_);
  if (boundary != nullptr) {
    if (boundary->size() != mesh_->num_faces()) throw ConfigError("boundary data size mismatch");
    for (int f = mesh_->first_boundary_face(); f < mesh_->num_faces(); ++f) {
      const Face& face = mesh_->face(f);
      if (dirichlet_.contains(face.tag)) {
        b[face.owner] += face.length / face.distance * (*boundary)[f];
      }
    }
  }
  return b;
}

Eigen::VectorXd EllipticOperator::solve_system(const Eigen::VectorXd& b) const {
  const double bnorm = b.norm();
  if (bnorm == 0.0) return Eigen::VectorXd::Zero(b.size());

  Eigen::VectorXd x;
  if (factor_->direct) {
    x = factor_->ldlt.solve(b);
    const Eigen::VectorXd r = b - stiffness_ * x;
    x += factor_->ldlt.solve(r);
  } else {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-12);
    cg.setMaxIterations(10 * static_cast<int>(b.size()));
    cg.compute(stiffness_);
    x = cg.solve(b);
  }
  const double res = (b - stiffness_ * x).norm() / bnorm;
  if (!(res <= kResidualTol)) {
    throw SolverError("elliptic solve did not converge", res);
  }
  return x;
}

CellField EllipticOperator::solve(const CellField& rhs, const FaceField& boundary) const {
  return solve_system(load(rhs, &boundary));
}

CellField EllipticOperator::solve_homogeneous(const CellField& rhs) const {
  return solve_system(load(rhs, nullptr));
}

CellField solve_poisson(const EllipticOperator& op, const CellField& n, const CellField& p,
                        const CellField& D, const CellField& doping, const FaceField& vbar) {
  const int nc = op.mesh().num_cells();
  if (n.size() != nc || p.size() != nc || D.size() != nc || doping.size() != nc) {
    throw ConfigError("solve_poisson: field sizes do not match the mesh");
  }
  return op.solve(n - p - D + doping, vbar);
}

CellField solve_stationary(const EllipticOperator& op, const CellField& doping,
                           const FaceField& vbi_trace) {
  return op.solve(doping, vbi_trace);
}

CellField solve_stationary_from_cells(const EllipticOperator& op, const CellField& doping,
                                      const CellField& vbi) {
  return op.solve(doping, boundary_trace(op.mesh(), vbi));
}

CellField solve_harmonic_weight(const EllipticOperator& op, int terminal) {
  if (terminal != 1 && terminal != 2) throw ConfigError("terminal index must be 1 or 2");
  const FaceField bc = terminal == 1 ? terminal_values(op.mesh(), 1.0, 0.0)
                                     : terminal_values(op.mesh(), 0.0, 1.0);
  return op.solve(op.mesh().zeros_cells(), bc);
}

GreenResult green_apply(const EllipticOperator& op, const CellField& g) {
  GreenResult out;
  out.value = op.solve_homogeneous(g);
  out.gradient = gradient(op.mesh(), out.value, op.mesh().zeros_faces(), op.dirichlet());
  return out;
}

FaceField boundary_trace(const Mesh& mesh, const CellField& cells) {
  FaceField trace = FaceField::Zero(mesh.num_faces());
  for (int f = mesh.first_boundary_face(); f < mesh.num_faces(); ++f) {
    trace[f] = cells[mesh.face(f).owner];
  }
  return trace;
}

PotentialDecomposition decompose_potential(const EllipticOperator& op, const CellField& doping,
                                           const FaceField& vbi_trace) {
  const Mesh& mesh = op.mesh();
  PotentialDecomposition d;
  d.stationary = solve_stationary(op, doping, vbi_trace);
  for (int j = 0; j < 2; ++j) {
    d.weights[j] = solve_harmonic_weight(op, j + 1);
    const FaceField bc = j == 0 ? terminal_values(mesh, 1.0, 0.0) : terminal_values(mesh, 0.0, 1.0);
    d.weight_gradients[j] = gradient(mesh, d.weights[j], bc, op.dirichlet());
  }
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k < 2; ++k) {
      d.M(j, k) = op.lambda2() * face_inner(mesh, d.weight_gradients[j], d.weight_gradients[k]);
    }
  }
  d.M = 0.5 * (d.M + d.M.transpose()).eval();
  return d;
}

CellField superpose_potential(const PotentialDecomposition& decomp, const Eigen::Vector2d& u_D,
                              const CellField& correction) {
  if (correction.size() != decomp.stationary.size()) {
    throw ConfigError("superpose_potential: correction size mismatch");
  }
  return decomp.stationary + u_D[0] * decomp.weights[0] + u_D[1] * decomp.weights[1] + correction;
}

}  // namespace memsim
