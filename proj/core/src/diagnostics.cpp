#include "memsim/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "memsim/errors.hpp"

namespace memsim {

namespace {

// (x) log(x) with the continuous value 0 at x = 0.
double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

bool on_terminal(const Face& f) { return f.tag == BoundaryTag::D1 || f.tag == BoundaryTag::D2; }

}  // namespace

double EnergyFunctions::log_k(double v) const {
  if (v <= k) return std::log(v + alpha);
  return std::log(k + alpha) + (v - k) / (k + alpha);
}

double EnergyFunctions::integrated_log(double u) const {
  auto below = [this](double x) { return xlogx(x + alpha) - x - xlogx(alpha); };
  if (u <= k) return below(u);
  const double d = u - k;
  return below(k) + d * std::log(k + alpha) + d * d / (2.0 * (k + alpha));
}

double EnergyFunctions::g(double u) const { return integrated_log(u) - u * log_k(1.0); }

double EnergyFunctions::G(double u, double ubar) const {
  return integrated_log(u) - integrated_log(ubar) - log_k(ubar) * (u - ubar);
}

double EnergyFunctions::h(double u) const {
  const double s0 = std::sqrt(alpha);
  if (u <= k) return 2.0 * (std::sqrt(u + alpha) - s0);
  const double sk = std::sqrt(k + alpha);
  return 2.0 * (sk - s0) + (u - k) / sk;
}

ReferenceFields make_reference_fields(const CouplingOperators& ops, const Eigen::Vector2d& n_bar,
                                      const Eigen::Vector2d& p_bar, const Eigen::Vector2d& u_D) {
  if (!(n_bar.minCoeff() > 0.0) || !(p_bar.minCoeff() > 0.0)) {
    throw ConfigError("reference boundary densities must be strictly positive");
  }
  const auto& w = ops.decomposition().weights;
  ReferenceFields r;
  r.n = n_bar[0] * w[0] + n_bar[1] * w[1];
  r.p = p_bar[0] * w[0] + p_bar[1] * w[1];
  r.D = (-ops.potential_lift(u_D)).array().exp().matrix();
  r.V_A = ops.stationary();
  return r;
}

EnergyReport free_energy(const Mesh& mesh, double lambda2, const DeviceState& state,
                         const CellField& V, const ReferenceFields& refs,
                         const Eigen::Vector2d& u_D, const DecoupledSystem* sys,
                         const Eigen::VectorXd* y, const EnergyFunctions& fn) {
  const int nc = mesh.num_cells();
  if (refs.n.minCoeff() <= 0.0 || refs.p.minCoeff() <= 0.0 || refs.D.minCoeff() <= 0.0) {
    throw ConfigError("reference fields must be strictly positive");
  }
  EnergyReport r;
  double internal = 0.0;
  double raw = 0.0;
  auto raw_density = [](double c, double cbar) { return xlogx(c) - c * std::log(cbar) - c; };
  for (int c = 0; c < nc; ++c) {
    internal += fn.G(state.n[c], refs.n[c]) + fn.G(state.p[c], refs.p[c]) +
                fn.G(state.D[c], refs.D[c]);
    raw += raw_density(state.n[c], refs.n[c]) + raw_density(state.p[c], refs.p[c]) +
           raw_density(state.D[c], refs.D[c]);
  }
  r.internal = internal * mesh.cell_area();
  const double raw_internal = raw * mesh.cell_area();

  const FaceField grad = gradient(mesh, V - refs.V_A, terminal_values(mesh, u_D[0], u_D[1]),
                                  TagSet::terminals());
  r.electric = 0.5 * lambda2 * face_inner(mesh, grad, grad);

  if (sys != nullptr && y != nullptr) r.network = 0.5 * y->dot(sys->energy_matrix() * *y);

  r.total = r.internal + r.electric + r.network;
  r.raw = raw_internal + r.electric + r.network;
  return r;
}

Eigen::Vector3d dissipation(const Mesh& mesh, const DeviceState& state, const CellField& V,
                            const FaceField& vbar, const FaceField& n_boundary,
                            const FaceField& p_boundary) {
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  auto term = [](double cl, double cr, double dv, double sign) {
    const double sl = std::sqrt(std::max(cl, 0.0));
    const double sr = std::sqrt(std::max(cr, 0.0));
    const double s_face = std::sqrt(0.5 * (std::max(cl, 0.0) + std::max(cr, 0.0)));
    const double q = 2.0 * (sr - sl) - sign * s_face * dv;
    return q * q;
  };
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const double scale = face.length / face.distance;  // weight / distance^2
    if (!face.is_boundary()) {
      const int o = face.owner, nb = face.neighbor;
      const double dv = V[nb] - V[o];
      out[0] += scale * term(state.n[o], state.n[nb], dv, 1.0);
      out[1] += scale * term(state.p[o], state.p[nb], dv, -1.0);
      out[2] += scale * term(state.D[o], state.D[nb], dv, -1.0);
    } else if (on_terminal(face)) {
      const int o = face.owner;
      const double dv = vbar[f] - V[o];
      out[0] += scale * term(state.n[o], n_boundary[f], dv, 1.0);
      out[1] += scale * term(state.p[o], p_boundary[f], dv, -1.0);
    }
  }
  return out;
}

double min_density(const DeviceState& s) {
  return std::min({s.n.minCoeff(), s.p.minCoeff(), s.D.minCoeff()});
}

double max_density(const DeviceState& s) {
  return std::max({s.n.maxCoeff(), s.p.maxCoeff(), s.D.maxCoeff()});
}

BoundsReport bounds_monitor(const DeviceState& state, double t, double c0, double initial_min,
                            double upper_bound, double lambda2, double A_sup) {
  if (!(c0 > 0.0)) throw ConfigError("lower-bound constant c0 must be positive");
  BoundsReport r;
  r.mu = 2.0 * (upper_bound + A_sup) / lambda2;
  r.m0 = std::min(c0, initial_min);
  r.threshold = r.m0 * std::exp(-r.mu * t);
  r.minima = {state.n.minCoeff(), state.p.minCoeff(), state.D.minCoeff()};
  r.maxima = {state.n.maxCoeff(), state.p.maxCoeff(), state.D.maxCoeff()};
  r.margin = r.minima.minCoeff() - r.threshold;
  r.satisfied = r.margin >= 0.0;
  return r;
}

double boundary_flux(const Mesh& mesh, const FaceField& flux) {
  double sum = 0.0;
  for (int f = mesh.first_boundary_face(); f < mesh.num_faces(); ++f) {
    sum += mesh.face(f).length * flux[f];
  }
  return sum;
}

ConservationReport conservation_report(const std::vector<StepRecord>& history) {
  if (history.size() < 2) throw ConfigError("conservation report needs at least two records");
  ConservationReport r;
  const double D0 = history.front().mass[2];
  for (std::size_t i = 1; i < history.size(); ++i) {
    const auto& prev = history[i - 1];
    const auto& cur = history[i];
    r.max_D_drift =
        std::max(r.max_D_drift, std::abs(cur.mass[2] - D0) / std::max(std::abs(D0), 1e-300));
    const double bn = cur.mass[0] - prev.mass[0] - cur.dt * cur.inflow_n;
    const double bp = cur.mass[1] - prev.mass[1] - cur.dt * cur.inflow_p;
    r.max_n_balance = std::max(r.max_n_balance, std::abs(bn) / std::max(1.0, cur.mass[0]));
    r.max_p_balance = std::max(r.max_p_balance, std::abs(bp) / std::max(1.0, cur.mass[1]));
  }
  for (const auto& rec : history) {
    r.max_charge_imbalance =
        std::max(r.max_charge_imbalance,
                 std::abs(rec.I_D[0] + rec.I_D[1]) / std::max(1.0, std::abs(rec.I_D[0])));
  }
  return r;
}

}  // namespace memsim
