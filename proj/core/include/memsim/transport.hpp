#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "memsim/grid.hpp"
#include "memsim/poisson.hpp"

namespace memsim {

enum class Species : std::uint8_t { Electrons, Holes, Vacancies };

/// Every species obeys  d_t c = div(grad c - c grad psi)  with psi = sign * V:
/// +1 for electrons, -1 for holes and oxide vacancies.
constexpr double drift_sign(Species s) { return s == Species::Electrons ? 1.0 : -1.0; }

/// Drift truncation level k. Disabled (k = infinity) by default.
struct Truncation {
  double k = std::numeric_limits<double>::infinity();

  bool enabled() const { return k < std::numeric_limits<double>::infinity(); }
  static Truncation off() { return {}; }
  static Truncation at(double level);
};

/// B(x) = x / (e^x - 1), B(0) = 1.
double bernoulli(double x);

/// Clamp to [0, k].
double truncate(double s, double k);

/// Weight a in (0, 1) of the Scharfetter-Gummel face density a*c_right + (1-a)*c_left.
double sg_upwind_weight(double dpsi);

/// Scharfetter-Gummel approximation of (grad c - c grad psi) . nu on a face of
/// length h oriented left -> right, with dpsi = psi_right - psi_left.
double sg_face_flux(double c_left, double c_right, double dpsi, double h,
                    Truncation trunc = Truncation::off());

/// Boundary behaviour of one species. Electrons and holes carry Dirichlet
/// data on the terminals and no flux on insulating faces; vacancies are
/// no-flux on the whole boundary.
struct SpeciesBoundary {
  bool dirichlet = false;
  FaceField values;  // densities on terminal faces (face-indexed)

  static SpeciesBoundary no_flux() { return {}; }
  static SpeciesBoundary terminals(FaceField values) { return {true, std::move(values)}; }
};

struct SpeciesStep {
  CellField density;
  FaceField flux;  // (grad c - c grad psi) . nu per face
};

/// Implicit Euler step of one species. Keeps the symbolic factorization
/// between calls; not thread-safe, use one stepper per thread.
class SpeciesStepper {
 public:
  explicit SpeciesStepper(std::shared_ptr<const Mesh> mesh);
  ~SpeciesStepper();
  SpeciesStepper(SpeciesStepper&&) noexcept;
  SpeciesStepper& operator=(SpeciesStepper&&) noexcept;

  /// `psi` and `psi_boundary` hold the drift potential on cells and on
  /// terminal faces. With truncation on, the face drift is limited using
  /// the face density of `lag` (defaults to c_old).
  SpeciesStep advance(const CellField& c_old, const CellField& psi, const FaceField& psi_boundary,
                      double dt, const SpeciesBoundary& bc, Truncation trunc = Truncation::off(),
                      const CellField* lag = nullptr);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SpeciesStep advance_species(std::shared_ptr<const Mesh> mesh, const CellField& c_old,
                            const CellField& psi, const FaceField& psi_boundary, double dt,
                            const SpeciesBoundary& bc, Truncation trunc = Truncation::off());

/// Face fluxes of a given density with the coefficients used by the stepper.
FaceField species_flux(const Mesh& mesh, const CellField& c, const CellField& psi,
                       const FaceField& psi_boundary, const SpeciesBoundary& bc,
                       Truncation trunc = Truncation::off(), const CellField* lag = nullptr);

struct DeviceState {
  CellField n;
  CellField p;
  CellField D;
};

/// Static description of the device shared by all time steps.
struct DeviceProblem {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const EllipticOperator> poisson;  // Dirichlet on {D1, D2}
  CellField doping;
  FaceField n_boundary;  // n-bar on terminal faces
  FaceField p_boundary;  // p-bar on terminal faces
};

struct GummelOptions {
  double tol = 1e-8;
  int max_iter = 50;
  Truncation truncation;
};

struct GummelResult {
  DeviceState state;
  CellField potential;            // Poisson solution for `state`
  CellField transport_potential;  // potential used in the last transport sweep
  FaceField flux_n;
  FaceField flux_p;
  FaceField flux_D;
  int iterations = 0;
  std::vector<double> residuals;  // max-norm potential change per sweep
};

class DeviceSolver {
 public:
  explicit DeviceSolver(DeviceProblem problem);

  const DeviceProblem& problem() const { return problem_; }

  /// One implicit time step: alternates Poisson and the three species
  /// advances until the potential changes by at most `opts.tol`.
  GummelResult step(const DeviceState& old, const FaceField& vbar, double dt,
                    const GummelOptions& opts);

  CellField potential(const DeviceState& state, const FaceField& vbar) const;

 private:
  DeviceProblem problem_;
  SpeciesStepper stepper_;
};

GummelResult gummel_solve(const DeviceProblem& problem, const DeviceState& old,
                          const FaceField& vbar, double dt, const GummelOptions& opts);

struct FaceCurrents {
  FaceField n;
  FaceField p;
  FaceField D;
  FaceField total;
};

/// Electric current densities J_n = F_n, J_p = -F_p, J_D = -F_D from species fluxes.
FaceCurrents currents_from_fluxes(const FaceField& flux_n, const FaceField& flux_p,
                                  const FaceField& flux_D);

FaceCurrents face_currents(const DeviceProblem& problem, const DeviceState& state,
                           const CellField& V, const FaceField& vbar,
                           Truncation trunc = Truncation::off());

}  // namespace memsim
