#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "memsim/config_io.hpp"
#include "memsim/netlist_io.hpp"
#include "memsim/output.hpp"
#include "memsim/simulation.hpp"

namespace fs = std::filesystem;
using namespace memsim;

namespace {

constexpr int kExitFailedCheck = 2;

struct Options {
  std::string input;
  std::string device;
  double dt = 1e-2;
  double t_end = 1.0;
  std::string k_trunc;
  std::optional<double> gummel_tol;
  bool repair = false;
  std::string drive;
  std::string bias;
  int fields_every = 0;
  std::string out = "out";
};

bool is_netlist(const std::string& path) {
  const std::string ext = fs::path(path).extension().string();
  return ext == ".cir" || ext == ".net" || ext == ".sp";
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find(',', start);
    out.push_back(s.substr(start, p == std::string::npos ? std::string::npos : p - start));
    if (p == std::string::npos) return out;
    start = p + 1;
  }
}

double to_real(const std::string& text, const std::string& what) {
  double v = 0.0;
  if (!parse_real(text, v)) throw ConfigError("invalid number '" + text + "' in " + what);
  return v;
}

/// SIN:amp,freq[,phase] or DC:value
Waveform parse_drive(const std::string& text) {
  const std::size_t colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("--drive expects SIN:amp,freq[,phase] or DC:v");
  std::string kind = text.substr(0, colon);
  for (auto& ch : kind) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  const auto args = split_commas(text.substr(colon + 1));
  if (kind == "DC" && args.size() == 1) return Waveform::dc(to_real(args[0], "--drive"));
  if (kind == "SIN" && (args.size() == 2 || args.size() == 3)) {
    return Waveform::sin(to_real(args[0], "--drive"), to_real(args[1], "--drive"),
                         args.size() == 3 ? to_real(args[2], "--drive") : 0.0);
  }
  throw ConfigError("--drive expects SIN:amp,freq[,phase] or DC:v");
}

Eigen::Vector2d parse_bias(const std::string& text) {
  const auto args = split_commas(text);
  if (args.size() == 1) return {to_real(args[0], "--bias"), 0.0};
  if (args.size() == 2) return {to_real(args[0], "--bias"), to_real(args[1], "--bias")};
  throw ConfigError("--bias expects u1 or u1,u2");
}

struct Inputs {
  DeviceConfig device;
  std::optional<Netlist> netlist;
};

/// Reads the positional input: a netlist whose memristor names its device
/// config (relative to the netlist), or a device config on its own.
Inputs load_inputs(const Options& o) {
  Inputs in;
  std::string device_path = o.device;
  if (is_netlist(o.input)) {
    in.netlist = read_netlist_file(o.input);
    validate_netlist(*in.netlist, true);
    if (device_path.empty()) {
      const std::string& ref = in.netlist->memristor()->device;
      if (ref.empty()) throw ConfigError("memristor has no device=<path>; pass --device");
      const fs::path p(ref);
      device_path = p.is_absolute() ? ref : (fs::path(o.input).parent_path() / p).string();
    }
  } else {
    if (!device_path.empty()) throw ConfigError("--device only applies to netlist inputs");
    device_path = o.input;
  }
  in.device = read_device_config(device_path);
  if (!o.k_trunc.empty()) {
    if (o.k_trunc == "off") {
      in.device.truncation = Truncation::off();
    } else {
      in.device.truncation = Truncation::at(to_real(o.k_trunc, "--k-trunc"));
    }
  }
  if (o.gummel_tol) in.device.gummel_tol = *o.gummel_tol;
  in.device.validate();
  return in;
}

RunConfig make_run(const Options& o, const Inputs& in) {
  RunConfig run;
  run.dt = o.dt;
  run.t_end = o.t_end;
  run.repair_consistency = o.repair;
  run.fields_every = o.fields_every;
  run.out_dir = o.out;
  if (!o.drive.empty()) {
    if (in.netlist) throw ConfigError("--drive replaces the network; pass a device config");
    run.mode = RunMode::Drive;
    run.drive.terminal1 = parse_drive(o.drive);
  } else if (in.netlist) {
    if (!o.bias.empty()) throw ConfigError("--bias replaces the network; pass a device config");
    run.mode = RunMode::Coupled;
  } else {
    run.mode = RunMode::Device;
    if (!o.bias.empty()) run.bias = parse_bias(o.bias);
  }
  run.validate();
  return run;
}

void dump_fields(const Simulation& sim, const fs::path& dir) {
  write_fields((dir / field_file_name(sim.step_index())).string(), sim.mesh(), sim.time(),
               sim.state(), sim.potential());
}

int cmd_check(const Options& o) {
  if (!is_netlist(o.input)) throw ConfigError("check expects a netlist (.cir)");
  const Inputs in = load_inputs(o);
  const CircuitCheck report = check_circuit(*in.netlist, in.device);
  std::cout << report.describe();
  std::cout << (report.ok() ? "check passed\n" : "check FAILED\n");
  return report.ok() ? 0 : kExitFailedCheck;
}

int cmd_run(const Options& o) {
  const Inputs in = load_inputs(o);
  const RunConfig run = make_run(o, in);
  const fs::path dir(run.out_dir);
  fs::create_directories(dir);
  const fs::path csv = dir / "timeseries.csv";

  Simulation sim(in.device, run, in.netlist ? &*in.netlist : nullptr);
  if (run.fields_every > 0) dump_fields(sim, dir);
  const int steps = run.num_steps();
  try {
    for (int m = 0; m < steps; ++m) {
      sim.step();
      if (run.fields_every > 0 && sim.step_index() % run.fields_every == 0) dump_fields(sim, dir);
    }
  } catch (const SimulationError& e) {
    write_csv(csv.string(), sim.history());
    std::cerr << "memsim: " << e.what() << "\n  partial history written to " << csv.string()
              << "\n";
    return 1;
  }
  write_csv(csv.string(), sim.history());
  const HistoryRow& last = sim.last();
  std::printf("%d steps to t=%.6g, H=%.10g, I_D=(%.10g, %.10g)\nwrote %s\n", steps, last.t,
              last.energy.total, last.I_D[0], last.I_D[1], csv.string().c_str());
  return 0;
}

int cmd_steady(const Options& o) {
  const Inputs in = load_inputs(o);
  const RunConfig run = make_run(o, in);
  const fs::path dir(run.out_dir);
  fs::create_directories(dir);
  const SteadyResult res = run_steady(in.device, run, in.netlist ? &*in.netlist : nullptr);

  History h;
  if (in.netlist) {
    const MnaStructure s = build_structure(*in.netlist);
    h.m = s.m;
    h.n_L = s.n_L();
    h.n_V = s.n_V();
  }
  h.dt = run.dt;
  h.rows.push_back(res.row);
  write_csv((dir / "steady.csv").string(), h);
  const Mesh mesh = build_mesh(in.device.domain, in.device.nx, in.device.ny);
  write_fields((dir / "fields_steady.txt").string(), mesh, res.t, res.state, res.potential);
  std::printf("%s after %d steps (t=%.6g, max |dc/dt| = %.3g), I_D=(%.10g, %.10g)\n",
              res.converged ? "converged" : "NOT converged", res.steps, res.t, res.rate,
              res.row.I_D[0], res.row.I_D[1]);
  return res.converged ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memristor drift-diffusion device coupled to a circuit"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("input", o.input, "netlist (.cir) or device config")->required();
    sub->add_option("--device", o.device, "device config overriding the memristor's device=");
    sub->add_option("--k-trunc", o.k_trunc, "drift truncation level, or 'off'");
    sub->add_option("--gummel-tol", o.gummel_tol, "Gummel tolerance on the potential change");
  };
  auto add_run = [&o](CLI::App* sub) {
    sub->add_option("--dt", o.dt, "time step")->check(CLI::PositiveNumber);
    sub->add_flag("--repair-consistency", o.repair,
                  "project the initial network state onto the consistent manifold");
    sub->add_option("--drive", o.drive, "terminal-1 voltage SIN:amp,freq[,phase] or DC:v");
    sub->add_option("--bias", o.bias, "fixed terminal voltages u1[,u2] for a device config");
    sub->add_option("--out", o.out, "output directory");
  };

  auto* check = app.add_subcommand("check", "index-1 topology, E1 regularity and consistency");
  add_common(check);

  auto* run = app.add_subcommand("run", "transient simulation");
  add_common(run);
  add_run(run);
  run->add_option("--t-end", o.t_end, "final time")->check(CLI::PositiveNumber);
  run->add_option("--fields-every", o.fields_every, "write field dumps every N steps")
      ->check(CLI::NonNegativeNumber);

  auto* steady = app.add_subcommand("steady", "pseudo-transient continuation to steady state");
  add_common(steady);
  add_run(steady);

  CLI11_PARSE(app, argc, argv);
  try {
    if (check->parsed()) return cmd_check(o);
    if (run->parsed()) return cmd_run(o);
    return cmd_steady(o);
  } catch (const Error& e) {
    std::cerr << "memsim: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "memsim: " << e.what() << "\n";
    return 1;
  }
}
