// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "generators.hpp"
#include "memsim/config_io.hpp"
#include "memsim/coupling.hpp"
#include "memsim/diagnostics.hpp"
#include "memsim/netlist_io.hpp"
#include "memsim/network.hpp"
#include "memsim/poisson.hpp"
#include "memsim/simulation.hpp"

using namespace memsim;
using memsim::testing::config_path;
using memsim::testing::Gen;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double max_abs(const Eigen::VectorXd& v) { return v.lpNorm<Eigen::Infinity>(); }

std::shared_ptr<const Mesh> unit_mesh(int n) {
  return std::make_shared<const Mesh>(build_mesh(DomainSpec::unit_square(), n, n));
}

RunConfig device_run(double dt, int steps, Eigen::Vector2d bias) {
  RunConfig run;
  run.mode = RunMode::Device;
  run.dt = dt;
  run.t_end = dt * steps;
  run.bias = bias;
  return run;
}

double charge_imbalance(const History& h) {
  double worst = 0.0;
  for (const auto& r : h.rows) {
    worst = std::max(worst, std::abs(r.I_D[0] + r.I_D[1]) / std::max(1.0, std::abs(r.I_D[0])));
  }
  return worst;
}

// 1
Outcome superposition() {
  Gen g(101);
  const auto mesh = unit_mesh(64);
  double worst = 0.0;
  for (int trial = 0; trial < 4; ++trial) {
    const double lambda2 = g.uniform(0.05, 2.0);
    const EllipticOperator op(mesh, lambda2, TagSet::terminals());
    const CellField doping = g.cells(*mesh, -2.0, 2.0);
    const CellField n = g.cells(*mesh, 0.0, 3.0);
    const CellField p = g.cells(*mesh, 0.0, 3.0);
    const CellField D = g.cells(*mesh, 0.0, 3.0);
    const Eigen::Vector2d u = g.vector(2, -3.0, 3.0);
    const BuiltInPotential vbi = built_in_potential(*mesh, doping, g.uniform(0.5, 2.0));
    const PotentialDecomposition decomp = decompose_potential(op, doping, vbi.trace);

    const FaceField vbar = vbi.trace + terminal_values(*mesh, u[0], u[1]);
    const CellField direct = solve_poisson(op, n, p, D, doping, vbar);
    const CellField superposed = superpose_potential(decomp, u, green_apply(op, n - p - D).value);
    worst = std::max(worst, max_abs(direct - superposed) / (1.0 + max_abs(direct)));
  }
  return {worst <= 1e-8, fmt("max relative deviation %.3e over 4 random trials (tol 1e-8)", worst)};
}

// 2
Outcome harmonic_weights() {
  double sum_err = 0.0;
  double m_err = 0.0;
  for (const auto& [n, lambda2] : {std::pair{32, 1.0}, std::pair{48, 0.37}}) {
    const auto mesh = unit_mesh(n);
    const auto op = std::make_shared<const EllipticOperator>(mesh, lambda2, TagSet::terminals());
    const CellField doping = CellField::Constant(mesh->num_cells(), 0.5);
    const CouplingOperators ops(op, doping, built_in_potential(*mesh, doping, 1.0));
    const auto& w = ops.decomposition().weights;
    sum_err = std::max(sum_err, max_abs(w[0] + w[1] - CellField::Ones(mesh->num_cells())));
    Eigen::Matrix2d expected;
    expected << 1.0, -1.0, -1.0, 1.0;
    m_err = std::max(m_err, (ops.M() - lambda2 * expected).cwiseAbs().maxCoeff());
  }
  return {sum_err <= 1e-12 && m_err <= 1e-10,
          fmt("max |w1+w2-1| = %.3e (tol 1e-12), max |M - M_exact| = %.3e (tol 1e-10)", sum_err,
              m_err)};
}

// 3
Outcome charge_balance() {
  const Netlist net = read_netlist_file(config_path("reference.cir"));
  const DeviceConfig dev = read_device_config(config_path("memristor_unit.cfg"));
  RunConfig run;
  run.mode = RunMode::Coupled;
  run.dt = 0.02;
  run.t_end = 500 * run.dt;
  const History h = run_transient(dev, run, &net);
  const double worst = charge_imbalance(h);
  const bool ok = worst <= 1e-10 && h.rows.size() == 501;
  return {ok, fmt("%.0f steps of the reference circuit, max |I1+I2|/max(1,|I1|) = %.3e (tol 1e-10)",
                  static_cast<double>(h.rows.size() - 1), worst)};
}

// 4
Outcome vacancy_mass() {
  const DeviceConfig dev = read_device_config(config_path("relaxation.cfg"));
  const History h = run_transient(dev, device_run(0.01, 1000, {1.0, -0.5}));
  const double m0 = h.rows.front().mass[2];
  double drift = 0.0;
  for (const auto& r : h.rows) drift = std::max(drift, std::abs(r.mass[2] - m0) / m0);
  return {drift <= 1e-9 && h.rows.size() == 1001,
          fmt("1000 biased steps, max relative drift of the D mass %.3e (tol 1e-9)", drift)};
}

// 5
Outcome positivity_and_bounds() {
  const DeviceConfig dev = read_device_config(config_path("bounds.cfg"));
  const History h = run_transient(dev, device_run(1e-3, 1000, {0.5, 0.0}));
  const double c0 = 0.1;
  const auto& first = h.rows.front();
  const double m0 = std::min(c0, first.minima.minCoeff());
  double observed_max = 0.0;
  for (const auto& r : h.rows) observed_max = std::max(observed_max, r.maxima.maxCoeff());
  const double A_sup = dev.doping.max_abs();
  const double mu = 2.0 * (observed_max + A_sup) / dev.lambda2;
  double worst_margin = INFINITY;
  bool lower_ok = true;
  for (const auto& r : h.rows) {
    const double threshold = m0 * std::exp(-mu * r.t);
    const double margin = r.minima.minCoeff() - threshold;
    worst_margin = std::min(worst_margin, margin);
    if (margin < 0.0) lower_ok = false;
  }
  const bool reached_T = h.rows.size() == 1001 && std::abs(h.rows.back().t - 1.0) < 1e-12;

  // Randomized suite: nonnegative, partly vanishing data and random bias.
  Gen g(505);
  double random_min = INFINITY;
  for (int trial = 0; trial < 6; ++trial) {
    DeviceConfig rd;
    rd.nx = g.integer(6, 10);
    rd.ny = g.integer(6, 10);
    rd.lambda2 = g.uniform(0.5, 1.5);
    rd.doping.background = g.uniform(-1.0, 1.0);
    rd.doping.rects.push_back({0.0, g.uniform(0.2, 0.8), 0.0, 1.0, g.uniform(-1.0, 1.0)});
    rd.n_bar = g.vector(2, 0.2, 1.5);
    rd.p_bar = g.vector(2, 0.2, 1.5);
    for (PiecewiseField* f : {&rd.n0, &rd.p0, &rd.D0}) {
      f->background = g.coin() ? 0.0 : g.uniform(0.0, 1.5);
      const double x0 = g.uniform(0.0, 0.6), y0 = g.uniform(0.0, 0.6);
      f->rects.push_back({x0, x0 + 0.3, y0, y0 + 0.3, g.uniform(0.0, 2.0)});
    }
    const History rh = run_transient(rd, device_run(0.01, 20, g.vector(2, -3.0, 3.0)));
    for (const auto& r : rh.rows) random_min = std::min(random_min, r.minima.minCoeff());
  }
  const bool ok = lower_ok && reached_T && random_min >= 0.0;
  return {ok, fmt("mu = %.3f, worst margin over T=1 %.3e, min density in 6 random runs %.3e", mu,
                  worst_margin, random_min)};
}

// 6
Outcome energy_decay() {
  const DeviceConfig dev = read_device_config(config_path("relaxation.cfg"));
  const History h = run_transient(dev, device_run(0.01, 200, {0.0, 0.0}));
  double worst = -INFINITY;
  for (std::size_t i = 1; i < h.rows.size(); ++i) {
    worst = std::max(worst, h.rows[i].energy.total - h.rows[i - 1].energy.total);
  }
  return {worst <= 1e-10 && h.rows.size() == 201,
          fmt("200 zero-bias steps, H from %.6f to %.6f, largest increase %.3e (tol 1e-10)",
              h.rows.front().energy.total, h.rows.back().energy.total, worst)};
}

// 7
Outcome equilibrium_fixed_point() {
  const Netlist net = read_netlist_file(config_path("zero_source.cir"));
  const DeviceConfig dev = read_device_config(config_path("equilibrium.cfg"));
  RunConfig run;
  run.mode = RunMode::Coupled;
  run.dt = 0.01;
  run.t_end = 100 * run.dt;
  Simulation sim(dev, run, &net);
  const DeviceState s0 = sim.state();
  const Eigen::VectorXd x0 = sim.network_state();
  double drift = 0.0;
  for (int m = 0; m < 100; ++m) {
    sim.step();
    const DeviceState& s = sim.state();
    drift = std::max({drift, max_abs(s.n - s0.n), max_abs(s.p - s0.p), max_abs(s.D - s0.D),
                      max_abs(sim.network_state() - x0)});
  }
  return {drift <= 1e-12, fmt("max state drift over 100 coupled steps %.3e (tol 1e-12)", drift)};
}

// 8
Outcome decoupling_algebra() {
  Gen g(808);
  const std::vector<std::string> corpus{"reference.cir", "rc_ladder.cir", "zero_source.cir",
                                        "inconsistent.cir"};
  double proj_err = 0.0, qf_err = 0.0, min_form = INFINITY;
  for (const auto& name : corpus) {
    const Netlist net = read_netlist_file(config_path(name));
    const DeviceConfig dev = read_device_config(config_path(net.memristor()->device));
    const MnaStructure s = build_structure(net);
    const DecoupledSystem sys = build_decoupled(s, device_capacitance(dev));
    const Eigen::MatrixXd& P = sys.P();
    const Eigen::MatrixXd& Q = sys.Q();
    const Eigen::MatrixXd piQ = Q.topRows(sys.m());
    proj_err = std::max({proj_err, (P * P - P).cwiseAbs().maxCoeff(),
                         (P * Q).cwiseAbs().maxCoeff(),
                         (sys.S().transpose() * piQ).cwiseAbs().maxCoeff()});
    for (int k = 0; k < 20; ++k) {
      const Eigen::VectorXd F = compute_F(g.vector(2, -5.0, 5.0), sys);
      qf_err = std::max(qf_err, max_abs(Q * sys.e1_solve(F)));
    }
    for (int k = 0; k < 1000; ++k) {
      const Eigen::VectorXd y = P * g.vector(sys.n(), -1.0, 1.0);
      min_form = std::min(min_form, y.dot(sys.E1() * y) / y.squaredNorm());
    }
  }

  const DeviceConfig unit_dev = read_device_config(config_path("memristor_unit.cfg"));
  const Eigen::Matrix2d M = device_capacitance(unit_dev);
  auto report = [&M](const std::string& name) {
    return check_index1(build_structure(read_netlist_file(config_path(name))), M);
  };
  const Index1Report ref = report("reference.cir");
  const Index1Report li = report("li_cutset.cir");
  const Index1Report cv = report("cv_loop.cir");
  const bool checker_ok = ref.ok() && !li.no_li_cutset && li.li_cutset_witness.size() > 0 &&
                          li.li_cutset_witness.norm() > 0.0 && !cv.no_cv_loop &&
                          cv.cv_loop_witness.size() > 0 && cv.cv_loop_witness.norm() > 0.0;
  const bool ok = proj_err <= 1e-12 && qf_err <= 1e-12 && min_form > 0.0 && checker_ok;
  return {ok, fmt("projector identities %.2e, |Q E1^-1 F| %.2e, min y'E1y/|y|^2 %.3e", proj_err,
                  qf_err, min_form) +
                  (checker_ok ? ", checker verdicts correct" : ", checker verdicts WRONG")};
}

// 9
Outcome consistency() {
  const Netlist net = read_netlist_file(config_path("inconsistent.cir"));
  const DeviceConfig dev = read_device_config(config_path(net.memristor()->device));
  const MnaStructure s = build_structure(net);
  const DecoupledSystem sys = build_decoupled(s, device_capacitance(dev));
  const Eigen::VectorXd s0 = source_vector(0.0, s);
  const ConsistencyResult repaired = check_consistency(initial_state(net, s), s0, sys, 1e-10, true);
  const double after = check_consistency(repaired.x0, s0, sys).residual;
  const CircuitCheck verdict = check_circuit(net, dev);

  bool aborted = false;
  RunConfig run;
  run.mode = RunMode::Coupled;
  run.dt = 0.01;
  run.t_end = 0.01;
  try {
    Simulation sim(dev, run, &net);
  } catch (const InconsistentInitialState&) {
    aborted = true;
  }
  const bool ok = after <= 1e-12 && !verdict.ok() && verdict.consistency_checked &&
                  !verdict.consistency.consistent && aborted;
  return {ok, fmt("residual before repair %.3e, after repair %.3e (tol 1e-12)", repaired.residual,
                  after) +
                  (verdict.ok() ? ", check ACCEPTED the inconsistent state"
                                : ", check rejects the inconsistent state") +
                  (aborted ? ", run aborts without repair" : ", run did NOT abort")};
}

// 10
double poisson_mms_error(int n) {
  const double lambda2 = 0.3;
  const double pi = std::acos(-1.0);
  auto exact = [](double x, double y) { return std::exp(x) * std::cos(std::acos(-1.0) * y) + x * x; };
  const auto mesh = unit_mesh(n);
  const EllipticOperator op(mesh, lambda2, TagSet::terminals());
  CellField rhs(mesh->num_cells());
  CellField u(mesh->num_cells());
  for (int c = 0; c < mesh->num_cells(); ++c) {
    const double x = mesh->center_x(c), y = mesh->center_y(c);
    rhs[c] = lambda2 * (std::exp(x) * std::cos(pi * y) * (1.0 - pi * pi) + 2.0);
    u[c] = exact(x, y);
  }
  FaceField bc = mesh->zeros_faces();
  for (int f = mesh->first_boundary_face(); f < mesh->num_faces(); ++f) {
    bc[f] = exact(mesh->face(f).x, mesh->face(f).y);
  }
  return max_abs(op.solve(rhs, bc) - u);
}

Outcome convergence() {
  const double e32 = poisson_mms_error(32), e64 = poisson_mms_error(64), e128 = poisson_mms_error(128);
  const double p1 = std::log2(e32 / e64), p2 = std::log2(e64 / e128);

  DeviceConfig dev = read_device_config(config_path("relaxation.cfg"));
  dev.gummel_tol = 1e-12;
  const double T = 0.04;
  auto final_state = [&](double dt) {
    RunConfig run = device_run(dt, static_cast<int>(std::llround(T / dt)), {1.0, 0.0});
    Simulation sim(dev, run);
    for (int m = 0; m < run.num_steps(); ++m) sim.step();
    return sim.state();
  };
  const DeviceState ref = final_state(1.25e-4);
  std::vector<double> err;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    const DeviceState s = final_state(dt);
    err.push_back(std::max({max_abs(s.n - ref.n), max_abs(s.p - ref.p), max_abs(s.D - ref.D)}));
  }
  const double q1 = std::log2(err[0] / err[1]), q2 = std::log2(err[1] / err[2]);
  const bool ok = p1 >= 1.9 && p2 >= 1.9 && q1 >= 0.9 && q2 >= 0.9;
  return {ok, fmt("Poisson orders %.3f, %.3f (min 1.9); ", p1, p2) +
                  fmt("time orders %.3f, %.3f (min 0.9)", q1, q2)};
}

// 11
Outcome pinched_hysteresis() {
  // Drive documented in configs/memristor_unit.cfg.
  const DeviceConfig dev = read_device_config(config_path("memristor_unit.cfg"));
  const double amplitude = 2.0, frequency = 0.05;
  RunConfig run;
  run.mode = RunMode::Drive;
  run.drive.terminal1 = Waveform::sin(amplitude, frequency);
  run.dt = 0.02;
  run.t_end = 2.0 / frequency;
  const History h = run_transient(dev, run);

  const double period_start = run.t_end - 1.0 / frequency - 1e-9;
  double peak = 0.0, pinch = 0.0;
  int crossings = 0;
  for (std::size_t i = 0; i + 1 < h.rows.size(); ++i) {
    const auto& a = h.rows[i];
    const auto& b = h.rows[i + 1];
    if (a.t < period_start) continue;
    peak = std::max({peak, std::abs(a.I_D[0]), std::abs(b.I_D[0])});
    const double u0 = a.u_D[0], u1 = b.u_D[0];
    if ((u0 <= 0.0 && u1 > 0.0) || (u0 >= 0.0 && u1 < 0.0)) {
      const double s = u0 / (u0 - u1);
      pinch = std::max(pinch, std::abs(a.I_D[0] + s * (b.I_D[0] - a.I_D[0])));
      ++crossings;
    }
  }
  const double ratio = pinch / peak;
  const double balance = charge_imbalance(h);
  const bool ok = crossings >= 2 && peak > 0.0 && ratio <= 0.05 && balance <= 1e-10;
  return {ok, fmt("peak |I1| %.4f, |I1| at zero crossings %.4f, ratio %.4f (max 0.05)", peak, pinch,
                  ratio) +
                  fmt(", driven-run charge balance %.2e", balance)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"superposition of the potential", superposition},
      {"harmonic weights and capacitance matrix", harmonic_weights},
      {"terminal charge balance", charge_balance},
      {"vacancy mass conservation", vacancy_mass},
      {"positivity and lower bound", positivity_and_bounds},
      {"zero-bias free-energy decay", energy_decay},
      {"equilibrium fixed point", equilibrium_fixed_point},
      {"decoupling algebra and index-1 checker", decoupling_algebra},
      {"consistent initialization", consistency},
      {"spatial and temporal convergence", convergence},
      {"pinched hysteresis", pinched_hysteresis},
  };
  int failed = 0;
  int id = 0;
  for (const auto& [name, fn] : criteria) {
    ++id;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("[%s] %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", id - failed, id);
  return failed == 0 ? 0 : 1;
}
