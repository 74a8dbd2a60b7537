#pragma once

#include <limits>
#include <vector>

#include <Eigen/Core>

#include "memsim/coupling.hpp"
#include "memsim/grid.hpp"
#include "memsim/network.hpp"
#include "memsim/transport.hpp"

namespace memsim {

/// Closed forms of the truncated, regularized entropy densities
///   g(u) = int_0^u int_1^v dw / (T_k(w) + alpha) dv,
///   G(u|ubar) = g(u) - g(ubar) - g'(ubar)(u - ubar),
///   h(u) = int_0^u dw / sqrt(T_k(w) + alpha).
/// k = infinity and alpha = 0 give u(log u - 1), its Bregman distance and 2 sqrt(u).
struct EnergyFunctions {
  double k = std::numeric_limits<double>::infinity();
  double alpha = 0.0;

  /// Antiderivative of 1 / (T_k(v) + alpha); g'(v) = log_k(v) - log_k(1).
  double log_k(double v) const;
  /// int_0^u log_k(v) dv.
  double integrated_log(double u) const;

  double g(double u) const;
  double G(double u, double ubar) const;
  double h(double u) const;
};

/// Strictly positive reference states entering the relative free energy.
struct ReferenceFields {
  CellField n;    // w_1 nbar_1 + w_2 nbar_2
  CellField p;
  CellField D;    // exp(-(V_bi + w_1 u_D^1 + w_2 u_D^2))
  CellField V_A;  // stationary potential
};

ReferenceFields make_reference_fields(const CouplingOperators& ops, const Eigen::Vector2d& n_bar,
                                      const Eigen::Vector2d& p_bar, const Eigen::Vector2d& u_D);

struct EnergyReport {
  double total = 0.0;
  double internal = 0.0;
  double electric = 0.0;
  double network = 0.0;
  double raw = 0.0;  // internal part as  c (log(c / cbar) - 1)  instead of Bregman form
};

/// `sys` and `y` may be omitted when the device runs without a network.
EnergyReport free_energy(const Mesh& mesh, double lambda2, const DeviceState& state,
                         const CellField& V, const ReferenceFields& refs,
                         const Eigen::Vector2d& u_D, const DecoupledSystem* sys,
                         const Eigen::VectorXd* y, const EnergyFunctions& fn = {});

/// Face quadrature of |2 grad sqrt(c) - s sqrt(c) grad V|^2 for the three
/// species (s = +1 for n, -1 for p and D). n and p include the terminal faces.
Eigen::Vector3d dissipation(const Mesh& mesh, const DeviceState& state, const CellField& V,
                            const FaceField& vbar, const FaceField& n_boundary,
                            const FaceField& p_boundary);

struct BoundsReport {
  double mu = 0.0;
  double m0 = 0.0;
  double threshold = 0.0;  // m0 exp(-mu t)
  Eigen::Vector3d minima = Eigen::Vector3d::Zero();
  Eigen::Vector3d maxima = Eigen::Vector3d::Zero();
  double margin = 0.0;  // min density - threshold
  bool satisfied = false;
};

/// mu = 2 (upper_bound + A_sup) / lambda2, m0 = min(c0, initial_min).
BoundsReport bounds_monitor(const DeviceState& state, double t, double c0, double initial_min,
                            double upper_bound, double lambda2, double A_sup);

double min_density(const DeviceState& state);
double max_density(const DeviceState& state);

/// Net outward flux  sum over boundary faces of |face| * flux.
double boundary_flux(const Mesh& mesh, const FaceField& flux);

struct StepRecord {
  double t = 0.0;
  double dt = 0.0;
  Eigen::Vector3d mass = Eigen::Vector3d::Zero();  // n, p, D at t
  double inflow_n = 0.0;  // boundary_flux of n over the step ending at t
  double inflow_p = 0.0;
  Eigen::Vector2d I_D = Eigen::Vector2d::Zero();
};

struct ConservationReport {
  double max_D_drift = 0.0;          // relative to the initial D mass
  double max_n_balance = 0.0;        // relative per-step residual
  double max_p_balance = 0.0;
  double max_charge_imbalance = 0.0;  // |I_D^1 + I_D^2| / max(1, |I_D^1|)
};

ConservationReport conservation_report(const std::vector<StepRecord>& history);

}  // namespace memsim
