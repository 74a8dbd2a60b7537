#include "memsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace memsim {

void RunConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(t_end >= dt)) throw ConfigError("t_end must be at least dt");
  if (fields_every < 0) throw ConfigError("fields_every must be nonnegative");
  if (!(consistency_tol > 0.0)) throw ConfigError("consistency tolerance must be positive");
}

int RunConfig::num_steps() const { return static_cast<int>(std::llround(t_end / dt)); }

std::vector<StepRecord> History::step_records() const {
  std::vector<StepRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    StepRecord s;
    s.t = r.t;
    s.dt = dt;
    s.mass = r.mass;
    s.inflow_n = r.inflow_n;
    s.inflow_p = r.inflow_p;
    s.I_D = r.I_D;
    out.push_back(s);
  }
  return out;
}

namespace {

std::string snapshot(const HistoryRow& r) {
  std::ostringstream os;
  os.precision(10);
  os << "last accepted t=" << r.t << " u_D=(" << r.u_D[0] << ", " << r.u_D[1] << ") I_D=("
     << r.I_D[0] << ", " << r.I_D[1] << ") H=" << r.energy.total << " min density "
     << r.minima.minCoeff() << " max density " << r.maxima.maxCoeff();
  return os.str();
}

}  // namespace

SimulationError::SimulationError(int step, const std::string& cause, const HistoryRow& last)
    : Error("step " + std::to_string(step) + " failed: " + cause + "\n  " + snapshot(last)),
      step_(step) {}

Simulation::Simulation(const DeviceConfig& device, const RunConfig& run, const Netlist* netlist)
    : device_(device), run_(run), dt_(run.dt) {
  device_.validate();
  run_.validate();
  mesh_ = std::make_shared<const Mesh>(build_mesh(device_.domain, device_.nx, device_.ny));
  op_ = std::make_shared<const EllipticOperator>(mesh_, device_.lambda2, TagSet::terminals());

  const CellField doping = device_.doping.sample(*mesh_);
  A_sup_ = doping.cwiseAbs().maxCoeff();
  ops_ = std::make_unique<CouplingOperators>(op_, doping,
                                             built_in_potential(*mesh_, doping, device_.intrinsic));
  DeviceProblem device_problem{mesh_, op_, doping,
                        terminal_values(*mesh_, device_.n_bar[0], device_.n_bar[1]),
                        terminal_values(*mesh_, device_.p_bar[0], device_.p_bar[1])};
  solver_ = std::make_unique<DeviceSolver>(std::move(device_problem));
  gummel_ = {device_.gummel_tol, device_.gummel_max_iter, device_.truncation};
  energy_fn_.k = device_.truncation.k;

  state_ = {device_.n0.sample(*mesh_), device_.p0.sample(*mesh_), device_.D0.sample(*mesh_)};
  c0_ = std::min({device_.n_bar.minCoeff(), device_.p_bar.minCoeff(), min_density(state_)});

  Eigen::Vector2d u_D = Eigen::Vector2d::Zero();
  if (run_.mode == RunMode::Coupled) {
    if (netlist == nullptr) throw ConfigError("coupled mode needs a netlist");
    structure_ = build_structure(*netlist);
    sys_.emplace(build_decoupled(*structure_, ops_->M()));
    const Eigen::VectorXd x0 = initial_state(*netlist, *structure_);
    const auto cons = check_consistency(x0, source(0.0), *sys_, run_.consistency_tol,
                                        run_.repair_consistency);
    consistency_residual_ = cons.residual;
    if (!cons.consistent && !run_.repair_consistency) {
      throw InconsistentInitialState(
          "initial network state violates the algebraic consistency condition Qx0 = "
          "QE1^{-1}(A1 P x0 + s0) (residual " +
              std::to_string(cons.residual) + "); rerun with --repair-consistency",
          cons.residual);
    }
    x_ = cons.x0;
    y_ = sys_->P() * x_;
    stepper_.emplace(*sys_, dt_);
    history_.m = structure_->m;
    history_.n_L = structure_->n_L();
    history_.n_V = structure_->n_V();
    u_D = sys_->u_D(y_);
  } else if (run_.mode == RunMode::Drive) {
    u_D = drive_mode(run_.drive, 0.0);
  } else {
    u_D = run_.bias;
  }
  history_.dt = dt_;

  const FaceField vbar = ops_->boundary_potential(u_D);
  V_ = solver_->potential(state_, vbar);
  const FaceCurrents J = face_currents(problem(), state_, V_, vbar, gummel_.truncation);
  const Eigen::Vector2d sI = ops_->script_I(J.total);
  Eigen::Vector2d dudt = Eigen::Vector2d::Zero();
  if (sys_) {
    dudt = terminal_voltage_rate(*sys_, y_, compute_F(sI, *sys_), source(0.0));
  } else if (run_.mode == RunMode::Drive) {
    dudt = drive_rate(run_.drive, 0.0);
  }
  running_max_ = max_density(state_);
  history_.rows.push_back(make_row(0.0, u_D, vbar, J, dudt, sI));
}

void Simulation::set_dt(double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (dt == dt_) return;
  dt_ = dt;
  if (sys_) stepper_.emplace(*sys_, dt_);
}

Eigen::VectorXd Simulation::source(double t) const { return source_vector(t, *structure_); }

Eigen::Vector2d Simulation::applied_voltage(double t_next) const {
  switch (run_.mode) {
    case RunMode::Coupled: return sys_->u_D(y_);
    case RunMode::Drive: return drive_mode(run_.drive, t_next);
    case RunMode::Device: break;
  }
  return run_.bias;
}

HistoryRow Simulation::make_row(double t, const Eigen::Vector2d& u_D, const FaceField& vbar,
                                const FaceCurrents& J, const Eigen::Vector2d& dudt,
                                const Eigen::Vector2d& script_I) const {
  const Mesh& mesh = *mesh_;
  HistoryRow r;
  r.t = t;
  r.x = x_;
  r.u_D = u_D;
  r.script_I = script_I;
  r.I_D = terminal_currents(script_I, ops_->M(), dudt);

  const ReferenceFields refs = make_reference_fields(*ops_, device_.n_bar, device_.p_bar, u_D);
  r.energy = free_energy(mesh, device_.lambda2, state_, V_, refs, u_D,
                         sys_ ? &*sys_ : nullptr, sys_ ? &y_ : nullptr, energy_fn_);
  r.dissipation = dissipation(mesh, state_, V_, vbar, problem().n_boundary, problem().p_boundary);
  r.mass = {integrate_cells(mesh, state_.n), integrate_cells(mesh, state_.p),
            integrate_cells(mesh, state_.D)};
  r.minima = {state_.n.minCoeff(), state_.p.minCoeff(), state_.D.minCoeff()};
  r.maxima = {state_.n.maxCoeff(), state_.p.maxCoeff(), state_.D.maxCoeff()};
  const double mu = 2.0 * (running_max_ + A_sup_) / device_.lambda2;
  r.lower_bound = c0_ * std::exp(-mu * t);
  r.inflow_n = boundary_flux(mesh, J.n);
  r.inflow_p = -boundary_flux(mesh, J.p);
  return r;
}

void Simulation::step() {
  const int next = step_ + 1;
  const double t_next = (run_.dt == dt_) ? next * dt_ : t_ + dt_;
  try {
    const Eigen::Vector2d u_D = applied_voltage(t_next);
    const FaceField vbar = ops_->boundary_potential(u_D);
    GummelResult g = solver_->step(state_, vbar, dt_, gummel_);
    const FaceCurrents J = currents_from_fluxes(g.flux_n, g.flux_p, g.flux_D);
    const Eigen::Vector2d sI = ops_->script_I(J.total);

    Eigen::Vector2d dudt = Eigen::Vector2d::Zero();
    if (sys_) {
      const Eigen::VectorXd F = compute_F(sI, *sys_);
      const Eigen::VectorXd s_next = source(t_next);
      y_ = stepper_->advance(y_, F, s_next);
      x_ = y_ + recover_z(y_, s_next, *sys_);
      dudt = terminal_voltage_rate(*sys_, y_, F, s_next);
    } else if (run_.mode == RunMode::Drive) {
      dudt = drive_rate(run_.drive, t_next);
    }

    state_ = std::move(g.state);
    V_ = std::move(g.potential);
    t_ = t_next;
    step_ = next;
    running_max_ = std::max(running_max_, max_density(state_));
    HistoryRow row = make_row(t_, u_D, vbar, J, dudt, sI);
    row.gummel_iterations = g.iterations;
    history_.rows.push_back(std::move(row));
  } catch (const SimulationError&) {
    throw;
  } catch (const Error& e) {
    throw SimulationError(next, e.what(), history_.rows.back());
  }
}

Eigen::Matrix2d device_capacitance(const DeviceConfig& device) {
  device.validate();
  auto mesh = std::make_shared<const Mesh>(build_mesh(device.domain, device.nx, device.ny));
  auto op = std::make_shared<const EllipticOperator>(mesh, device.lambda2, TagSet::terminals());
  const CellField doping = device.doping.sample(*mesh);
  const CouplingOperators ops(op, doping, built_in_potential(*mesh, doping, device.intrinsic));
  return ops.M();
}

std::string CircuitCheck::describe() const {
  std::ostringstream os;
  os << index1.describe() << "\n";
  if (!consistency_checked) {
    os << "consistency: not checked (network is not index 1)\n";
  } else {
    os << "consistency: " << (consistency.consistent ? "ok" : "violated") << " (residual "
       << consistency.residual << ")\n";
  }
  return os.str();
}

CircuitCheck check_circuit(const Netlist& netlist, const DeviceConfig& device, double tol) {
  validate_netlist(netlist, true);
  const MnaStructure structure = build_structure(netlist);
  const Eigen::Matrix2d M = device_capacitance(device);
  CircuitCheck out;
  out.index1 = check_index1(structure, M);
  if (!out.index1.ok()) return out;
  const DecoupledSystem sys = build_decoupled(structure, M);
  out.consistency = check_consistency(initial_state(netlist, structure),
                                      source_vector(0.0, structure), sys, tol, false);
  out.consistency_checked = true;
  return out;
}

History run_transient(const DeviceConfig& device, const RunConfig& run, const Netlist* netlist,
                      const StepObserver& observer) {
  Simulation sim(device, run, netlist);
  if (observer) observer(sim);
  const int steps = run.num_steps();
  for (int m = 0; m < steps; ++m) {
    sim.step();
    if (observer) observer(sim);
  }
  return sim.history();
}

SteadyResult run_steady(const DeviceConfig& device, const RunConfig& run, const Netlist* netlist,
                        double tol, int max_steps) {
  if (run.mode == RunMode::Drive) throw ConfigError("steady state needs a constant bias");
  Simulation sim(device, run, netlist);
  SteadyResult out;
  double dt = run.dt;
  const double dt_max = 1e3 * run.dt;
  for (int k = 0; k < max_steps; ++k) {
    const DeviceState before = sim.state();
    sim.set_dt(dt);
    try {
      sim.step();
    } catch (const SimulationError&) {
      if (dt <= run.dt * 1e-6) throw;
      dt *= 0.25;
      continue;
    }
    const DeviceState& after = sim.state();
    const double change = std::max({(after.n - before.n).lpNorm<Eigen::Infinity>(),
                                    (after.p - before.p).lpNorm<Eigen::Infinity>(),
                                    (after.D - before.D).lpNorm<Eigen::Infinity>()});
    out.steps = k + 1;
    out.rate = change / dt;
    if (out.rate <= tol) {
      out.converged = true;
      break;
    }
    dt = std::min(dt * 1.5, dt_max);
  }
  out.t = sim.time();
  out.row = sim.last();
  out.state = sim.state();
  out.potential = sim.potential();
  return out;
}

}  // namespace memsim
