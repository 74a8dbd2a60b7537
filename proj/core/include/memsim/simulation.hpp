#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "memsim/config_io.hpp"
#include "memsim/coupling.hpp"
#include "memsim/diagnostics.hpp"
#include "memsim/errors.hpp"
#include "memsim/network.hpp"
#include "memsim/transport.hpp"

namespace memsim {

/// Coupled: device and network advance together.
/// Drive: terminal voltages prescribed by a waveform, no network.
/// Device: fixed terminal bias, no network.
enum class RunMode : std::uint8_t { Coupled, Drive, Device };

struct RunConfig {
  double dt = 1e-3;
  double t_end = 1e-2;
  RunMode mode = RunMode::Coupled;
  DriveWaveform drive;
  Eigen::Vector2d bias = Eigen::Vector2d::Zero();
  bool repair_consistency = false;
  double consistency_tol = 1e-10;
  int fields_every = 0;  // 0 disables field dumps
  std::string out_dir;

  void validate() const;
  int num_steps() const;
};

struct HistoryRow {
  double t = 0.0;
  Eigen::VectorXd x;  // network state (u, i_L, i_V); empty without a network
  Eigen::Vector2d u_D = Eigen::Vector2d::Zero();  // terminal voltages seen by the device
  Eigen::Vector2d I_D = Eigen::Vector2d::Zero();
  Eigen::Vector2d script_I = Eigen::Vector2d::Zero();
  EnergyReport energy;
  Eigen::Vector3d dissipation = Eigen::Vector3d::Zero();
  Eigen::Vector3d mass = Eigen::Vector3d::Zero();
  Eigen::Vector3d minima = Eigen::Vector3d::Zero();
  Eigen::Vector3d maxima = Eigen::Vector3d::Zero();
  double lower_bound = 0.0;
  double inflow_n = 0.0;
  double inflow_p = 0.0;
  int gummel_iterations = 0;
};

struct History {
  int m = 0;
  int n_L = 0;
  int n_V = 0;
  double dt = 0.0;
  std::vector<HistoryRow> rows;

  std::vector<StepRecord> step_records() const;
};

/// A module error raised while advancing; carries the failing step and the last good row.
class SimulationError : public Error {
 public:
  SimulationError(int step, const std::string& cause, const HistoryRow& last);
  int step() const { return step_; }

 private:
  int step_;
};

class Simulation {
 public:
  /// `netlist` is required in coupled mode and ignored otherwise.
  Simulation(const DeviceConfig& device, const RunConfig& run, const Netlist* netlist = nullptr);

  void step();

  double time() const { return t_; }
  int step_index() const { return step_; }
  double dt() const { return dt_; }
  void set_dt(double dt);

  const Mesh& mesh() const { return *mesh_; }
  const DeviceProblem& problem() const { return solver_->problem(); }
  const CouplingOperators& coupling() const { return *ops_; }
  const DecoupledSystem* network() const { return sys_ ? &*sys_ : nullptr; }
  const MnaStructure* structure() const { return structure_ ? &*structure_ : nullptr; }

  const DeviceState& state() const { return state_; }
  const CellField& potential() const { return V_; }
  const Eigen::VectorXd& network_state() const { return x_; }
  const History& history() const { return history_; }
  const HistoryRow& last() const { return history_.rows.back(); }
  double consistency_residual() const { return consistency_residual_; }
  double lower_bound_c0() const { return c0_; }
  double doping_sup() const { return A_sup_; }
  double lambda2() const { return device_.lambda2; }

 private:
  Eigen::Vector2d applied_voltage(double t_next) const;
  Eigen::VectorXd source(double t) const;
  HistoryRow make_row(double t, const Eigen::Vector2d& u_D, const FaceField& vbar,
                      const FaceCurrents& J, const Eigen::Vector2d& dudt,
                      const Eigen::Vector2d& script_I) const;

  DeviceConfig device_;
  RunConfig run_;
  std::shared_ptr<const Mesh> mesh_;
  std::shared_ptr<const EllipticOperator> op_;
  std::unique_ptr<CouplingOperators> ops_;
  std::unique_ptr<DeviceSolver> solver_;
  std::optional<MnaStructure> structure_;
  std::optional<DecoupledSystem> sys_;
  std::optional<NetworkStepper> stepper_;
  GummelOptions gummel_;
  EnergyFunctions energy_fn_;

  DeviceState state_;
  CellField V_;
  Eigen::VectorXd x_;
  Eigen::VectorXd y_;
  double t_ = 0.0;
  int step_ = 0;
  double dt_ = 0.0;
  double consistency_residual_ = 0.0;
  double c0_ = 0.0;
  double A_sup_ = 0.0;
  double running_max_ = 0.0;
  History history_;
};

/// Terminal capacitance matrix M of the device described by `device`.
Eigen::Matrix2d device_capacitance(const DeviceConfig& device);

/// Static checks run before a coupled simulation.
struct CircuitCheck {
  Index1Report index1;
  bool consistency_checked = false;  // false unless the index-1 checks pass
  ConsistencyResult consistency;

  bool ok() const { return index1.ok() && consistency_checked && consistency.consistent; }
  std::string describe() const;
};

/// Topology, regularity of E_1 and consistency of the netlist's initial state.
CircuitCheck check_circuit(const Netlist& netlist, const DeviceConfig& device, double tol = 1e-10);

using StepObserver = std::function<void(const Simulation&)>;

/// Runs to t_end; `observer` is called after construction and after every step.
History run_transient(const DeviceConfig& device, const RunConfig& run,
                      const Netlist* netlist = nullptr, const StepObserver& observer = {});

struct SteadyResult {
  bool converged = false;
  int steps = 0;
  double rate = 0.0;  // max-norm density change per unit time at the last step
  double t = 0.0;
  HistoryRow row;
  DeviceState state;
  CellField potential;
};

/// Pseudo-transient continuation: implicit steps with a growing time step until
/// the densities stop changing (max |dc/dt| <= tol).
SteadyResult run_steady(const DeviceConfig& device, const RunConfig& run,
                        const Netlist* netlist = nullptr, double tol = 1e-9, int max_steps = 2000);

}  // namespace memsim
