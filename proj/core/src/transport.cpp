#include "memsim/transport.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "memsim/errors.hpp"

namespace memsim {

Truncation Truncation::at(double level) {
  if (!(level > 0.0)) throw ConfigError("truncation level must be positive");
  return Truncation{level};
}

double bernoulli(double x) {
  if (std::abs(x) < 1e-5) return 1.0 - 0.5 * x + x * x / 12.0;
  if (x > 700.0) return x * std::exp(-x);
  if (x < -40.0) return -x;
  return x / std::expm1(x);
}

double truncate(double s, double k) { return std::max(0.0, std::min(k, s)); }

double sg_upwind_weight(double dpsi) {
  if (std::abs(dpsi) < 1e-3) {
    const double d2 = dpsi * dpsi;
    return 0.5 - dpsi / 12.0 + dpsi * d2 / 720.0;
  }
  return (1.0 - bernoulli(dpsi)) / dpsi;
}

double sg_face_flux(double c_left, double c_right, double dpsi, double h, Truncation trunc) {
  if (trunc.enabled()) {
    const double a = sg_upwind_weight(dpsi);
    const double c_face = a * c_right + (1.0 - a) * c_left;
    if (c_face > trunc.k || c_face < 0.0) {
      return (c_right - c_left) / h - truncate(c_face, trunc.k) * dpsi / h;
    }
  }
  return (bernoulli(dpsi) * c_right - bernoulli(-dpsi) * c_left) / h;
}

namespace {

/// F = (right * c_R - left * c_L) / h for the linearized face flux.
struct FluxCoefficients {
  double left;
  double right;
  bool truncated = false;
};

// Faces whose lagged density exceeds k get the drift scaled by k / c_face.
FluxCoefficients flux_coefficients(double dpsi, double c_left_lag, double c_right_lag,
                                   Truncation trunc) {
  if (trunc.enabled()) {
    const double a = sg_upwind_weight(dpsi);
    const double c_face = a * c_right_lag + (1.0 - a) * c_left_lag;
    if (c_face > trunc.k) {
      const double theta = trunc.k / c_face;
      return {1.0 + theta * dpsi * (1.0 - a), 1.0 - theta * dpsi * a, true};
    }
  }
  return {bernoulli(-dpsi), bernoulli(dpsi)};
}

void check_inputs(const Mesh& mesh, const CellField& psi, const FaceField& psi_boundary,
                  const SpeciesBoundary& bc) {
  if (psi.size() != mesh.num_cells()) throw ConfigError("potential size does not match the mesh");
  if (psi_boundary.size() != mesh.num_faces()) {
    throw ConfigError("boundary potential size does not match the mesh");
  }
  if (bc.dirichlet) {
    if (bc.values.size() != mesh.num_faces()) {
      throw ConfigError("boundary density size does not match the mesh");
    }
    for (int f = mesh.first_boundary_face(); f < mesh.num_faces(); ++f) {
      const auto tag = mesh.face(f).tag;
      if ((tag == BoundaryTag::D1 || tag == BoundaryTag::D2) && bc.values[f] < 0.0) {
        throw ConfigError("negative Dirichlet density on a terminal face");
      }
    }
  }
}

bool is_terminal(BoundaryTag tag) { return tag == BoundaryTag::D1 || tag == BoundaryTag::D2; }

}  // namespace

FaceField species_flux(const Mesh& mesh, const CellField& c, const CellField& psi,
                       const FaceField& psi_boundary, const SpeciesBoundary& bc, Truncation trunc,
                       const CellField* lag) {
  check_inputs(mesh, psi, psi_boundary, bc);
  const CellField& lagged = lag != nullptr ? *lag : c;
  FaceField flux = FaceField::Zero(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (!face.is_boundary()) {
      const double dpsi = psi[face.neighbor] - psi[face.owner];
      const auto coef =
          flux_coefficients(dpsi, lagged[face.owner], lagged[face.neighbor], trunc);
      flux[f] = (coef.right * c[face.neighbor] - coef.left * c[face.owner]) / face.distance;
    } else if (bc.dirichlet && is_terminal(face.tag)) {
      const double dpsi = psi_boundary[f] - psi[face.owner];
      const auto coef = flux_coefficients(dpsi, lagged[face.owner], bc.values[f], trunc);
      flux[f] = (coef.right * bc.values[f] - coef.left * c[face.owner]) / face.distance;
    }
  }
  return flux;
}

struct SpeciesStepper::Impl {
  std::shared_ptr<const Mesh> mesh;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool ldlt_analyzed = false;
  bool lu_analyzed = false;
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<Eigen::Triplet<double>> sym_triplets;
};

SpeciesStepper::SpeciesStepper(std::shared_ptr<const Mesh> mesh) : impl_(std::make_unique<Impl>()) {
  if (!mesh) throw ConfigError("species stepper needs a mesh");
  impl_->mesh = std::move(mesh);
}

SpeciesStepper::~SpeciesStepper() = default;
SpeciesStepper::SpeciesStepper(SpeciesStepper&&) noexcept = default;
SpeciesStepper& SpeciesStepper::operator=(SpeciesStepper&&) noexcept = default;

// Untruncated: S = diag(e^{-psi/2}) A diag(e^{psi/2}) is symmetric with
// off-diagonals -g sqrt(B(dpsi) B(-dpsi)) and goes through sparse Cholesky.
// Any truncated face switches to sparse LU on A.
SpeciesStep SpeciesStepper::advance(const CellField& c_old, const CellField& psi,
                                    const FaceField& psi_boundary, double dt,
                                    const SpeciesBoundary& bc, Truncation trunc,
                                    const CellField* lag) {
  Impl& im = *impl_;
  const Mesh& mesh = *im.mesh;
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (c_old.size() != mesh.num_cells()) throw ConfigError("density size does not match the mesh");
  check_inputs(mesh, psi, psi_boundary, bc);
  const CellField& lagged = lag != nullptr ? *lag : c_old;

  const int nc = mesh.num_cells();
  const double mass = mesh.cell_area() / dt;
  auto& trip = im.triplets;
  auto& sym = im.sym_triplets;
  trip.clear();
  sym.clear();
  trip.reserve(static_cast<std::size_t>(5 * nc));
  sym.reserve(static_cast<std::size_t>(3 * nc));
  Eigen::VectorXd rhs = mass * c_old;
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(nc, mass);
  bool any_truncated = false;

  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const double g = face.length / face.distance;
    if (!face.is_boundary()) {
      const int o = face.owner;
      const int nb = face.neighbor;
      const auto coef = flux_coefficients(psi[nb] - psi[o], lagged[o], lagged[nb], trunc);
      any_truncated = any_truncated || coef.truncated;
      diag[o] += g * coef.left;
      diag[nb] += g * coef.right;
      trip.emplace_back(o, nb, -g * coef.right);
      trip.emplace_back(nb, o, -g * coef.left);
      sym.emplace_back(std::max(o, nb), std::min(o, nb), -g * std::sqrt(coef.left * coef.right));
    } else if (bc.dirichlet && is_terminal(face.tag)) {
      const int o = face.owner;
      const auto coef = flux_coefficients(psi_boundary[f] - psi[o], lagged[o], bc.values[f], trunc);
      diag[o] += g * coef.left;
      rhs[o] += g * coef.right * bc.values[f];
    }
  }
  for (int c = 0; c < nc; ++c) {
    trip.emplace_back(c, c, diag[c]);
    sym.emplace_back(c, c, diag[c]);
  }

  SparseMatrix A(nc, nc);
  A.setFromTriplets(trip.begin(), trip.end());
  SpeciesStep out;
  if (!any_truncated) {
    const double shift = 0.5 * (psi.maxCoeff() + psi.minCoeff());
    const Eigen::ArrayXd half = 0.5 * (psi.array() - shift);
    SparseMatrix S(nc, nc);
    S.setFromTriplets(sym.begin(), sym.end());
    if (!im.ldlt_analyzed) {
      im.ldlt.analyzePattern(S);
      im.ldlt_analyzed = true;
    }
    im.ldlt.factorize(S);
    if (im.ldlt.info() != Eigen::Success) {
      throw SolverError("transport matrix factorization failed", 0.0);
    }
    const Eigen::VectorXd v = im.ldlt.solve((rhs.array() * (-half).exp()).matrix());
    out.density = (v.array() * half.exp()).matrix();
  } else {
    A.makeCompressed();
    if (!im.lu_analyzed) {
      im.lu.analyzePattern(A);
      im.lu_analyzed = true;
    }
    im.lu.factorize(A);
    if (im.lu.info() != Eigen::Success) {
      throw SolverError("transport matrix factorization failed", 0.0);
    }
    out.density = im.lu.solve(rhs);
  }
  const double bnorm = rhs.norm();
  const double res = bnorm > 0.0 ? (rhs - A * out.density).norm() / bnorm : 0.0;
  if (!(res <= 1e-10)) throw SolverError("transport solve inaccurate", res);

  out.flux = species_flux(mesh, out.density, psi, psi_boundary, bc, trunc, &lagged);
  return out;
}

SpeciesStep advance_species(std::shared_ptr<const Mesh> mesh, const CellField& c_old,
                            const CellField& psi, const FaceField& psi_boundary, double dt,
                            const SpeciesBoundary& bc, Truncation trunc) {
  SpeciesStepper stepper(std::move(mesh));
  return stepper.advance(c_old, psi, psi_boundary, dt, bc, trunc);
}

DeviceSolver::DeviceSolver(DeviceProblem problem)
    : problem_(std::move(problem)), stepper_(problem_.mesh) {
  if (!problem_.poisson) throw ConfigError("device problem needs a Poisson operator");
  const int nc = problem_.mesh->num_cells();
  const int nf = problem_.mesh->num_faces();
  if (problem_.doping.size() != nc || problem_.n_boundary.size() != nf ||
      problem_.p_boundary.size() != nf) {
    throw ConfigError("device problem fields do not match the mesh");
  }
}

CellField DeviceSolver::potential(const DeviceState& state, const FaceField& vbar) const {
  return solve_poisson(*problem_.poisson, state.n, state.p, state.D, problem_.doping, vbar);
}

GummelResult DeviceSolver::step(const DeviceState& old, const FaceField& vbar, double dt,
                                const GummelOptions& opts) {
  if (!(opts.tol > 0.0)) throw ConfigError("Gummel tolerance must be positive");
  if (opts.max_iter < 1) throw ConfigError("Gummel needs at least one sweep");

  const auto bc_n = SpeciesBoundary::terminals(problem_.n_boundary);
  const auto bc_p = SpeciesBoundary::terminals(problem_.p_boundary);
  const auto bc_D = SpeciesBoundary::no_flux();
  const FaceField vbar_neg = -vbar;

  GummelResult out;
  DeviceState iterate = old;
  CellField v_prev = potential(old, vbar);
  double res = 0.0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const CellField v_neg = -v_prev;
    auto sn = stepper_.advance(old.n, v_prev, vbar, dt, bc_n, opts.truncation, &iterate.n);
    auto sp = stepper_.advance(old.p, v_neg, vbar_neg, dt, bc_p, opts.truncation, &iterate.p);
    auto sd = stepper_.advance(old.D, v_neg, vbar_neg, dt, bc_D, opts.truncation, &iterate.D);
    iterate.n = std::move(sn.density);
    iterate.p = std::move(sp.density);
    iterate.D = std::move(sd.density);

    CellField v = potential(iterate, vbar);
    res = (v - v_prev).lpNorm<Eigen::Infinity>();
    out.residuals.push_back(res);
    if (res <= opts.tol) {
      out.state = std::move(iterate);
      out.potential = std::move(v);
      out.transport_potential = std::move(v_prev);
      out.flux_n = std::move(sn.flux);
      out.flux_p = std::move(sp.flux);
      out.flux_D = std::move(sd.flux);
      out.iterations = it;
      return out;
    }
    v_prev = std::move(v);
  }
  throw MaxIterExceeded(opts.max_iter, res);
}

GummelResult gummel_solve(const DeviceProblem& problem, const DeviceState& old,
                          const FaceField& vbar, double dt, const GummelOptions& opts) {
  DeviceSolver solver(problem);
  return solver.step(old, vbar, dt, opts);
}

FaceCurrents currents_from_fluxes(const FaceField& flux_n, const FaceField& flux_p,
                                  const FaceField& flux_D) {
  FaceCurrents j;
  j.n = flux_n;
  j.p = -flux_p;
  j.D = -flux_D;
  j.total = j.n + j.p + j.D;
  return j;
}

FaceCurrents face_currents(const DeviceProblem& problem, const DeviceState& state,
                           const CellField& V, const FaceField& vbar, Truncation trunc) {
  const Mesh& mesh = *problem.mesh;
  const CellField v_neg = -V;
  const FaceField vbar_neg = -vbar;
  return currents_from_fluxes(
      species_flux(mesh, state.n, V, vbar, SpeciesBoundary::terminals(problem.n_boundary), trunc),
      species_flux(mesh, state.p, v_neg, vbar_neg, SpeciesBoundary::terminals(problem.p_boundary),
                   trunc),
      species_flux(mesh, state.D, v_neg, vbar_neg, SpeciesBoundary::no_flux(), trunc));
}

}  // namespace memsim
