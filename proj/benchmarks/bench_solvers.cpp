#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

#include "memsim/coupling.hpp"
#include "memsim/netlist_io.hpp"
#include "memsim/poisson.hpp"
#include "memsim/transport.hpp"

using namespace memsim;

namespace {

struct Fixture {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const EllipticOperator> op;
  CellField doping;
  DeviceState state;

  explicit Fixture(int n) {
    mesh = std::make_shared<const Mesh>(build_mesh(DomainSpec::unit_square(), n, n));
    op = std::make_shared<const EllipticOperator>(mesh, 0.1, TagSet::terminals());
    doping = CellField::Ones(mesh->num_cells());
    CellField D(mesh->num_cells());
    for (int c = 0; c < mesh->num_cells(); ++c) D[c] = mesh->center_x(c) < 0.3 ? 2.5 : 0.2;
    state = {doping, doping, D};
  }

  DeviceProblem problem() const {
    return {mesh, op, doping, terminal_values(*mesh, 1.0, 1.0), terminal_values(*mesh, 1.0, 1.0)};
  }
};

void BM_PoissonSolve(benchmark::State& st) {
  const Fixture fx(static_cast<int>(st.range(0)));
  const FaceField vbar = terminal_values(*fx.mesh, 1.0, 0.0);
  for (auto _ : st) {
    benchmark::DoNotOptimize(
        solve_poisson(*fx.op, fx.state.n, fx.state.p, fx.state.D, fx.doping, vbar));
  }
  st.SetComplexityN(fx.mesh->num_cells());
}
BENCHMARK(BM_PoissonSolve)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_SpeciesAdvance(benchmark::State& st) {
  const Fixture fx(static_cast<int>(st.range(0)));
  const CellField V = solve_poisson(*fx.op, fx.state.n, fx.state.p, fx.state.D, fx.doping,
                                    terminal_values(*fx.mesh, 1.0, 0.0));
  const CellField psi = -V;
  const FaceField psi_b = fx.mesh->zeros_faces();
  SpeciesStepper stepper(fx.mesh);
  for (auto _ : st) {
    benchmark::DoNotOptimize(
        stepper.advance(fx.state.D, psi, psi_b, 1e-2, SpeciesBoundary::no_flux()));
  }
  st.SetComplexityN(fx.mesh->num_cells());
}
BENCHMARK(BM_SpeciesAdvance)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_GummelStep(benchmark::State& st) {
  const Fixture fx(static_cast<int>(st.range(0)));
  DeviceSolver solver(fx.problem());
  const FaceField vbar = terminal_values(*fx.mesh, 0.5, 0.0);
  const GummelOptions opts{1e-8, 100, Truncation::off()};
  for (auto _ : st) benchmark::DoNotOptimize(solver.step(fx.state, vbar, 1e-3, opts));
  st.SetComplexityN(fx.mesh->num_cells());
}
BENCHMARK(BM_GummelStep)->RangeMultiplier(2)->Range(16, 128)->Complexity();

void BM_ScriptI(benchmark::State& st) {
  const Fixture fx(static_cast<int>(st.range(0)));
  const CouplingOperators ops(fx.op, fx.doping, built_in_potential(*fx.mesh, fx.doping, 1.0));
  FaceField J(fx.mesh->num_faces());
  for (int f = 0; f < J.size(); ++f) J[f] = std::sin(0.1 * f);
  for (auto _ : st) benchmark::DoNotOptimize(ops.script_I(J));
  st.SetComplexityN(fx.mesh->num_cells());
}
BENCHMARK(BM_ScriptI)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_NetlistRoundTrip(benchmark::State& st) {
  std::string text;
  for (int k = 1; k <= 200; ++k) {
    text += "R r" + std::to_string(k) + " " + std::to_string(k) + " " + std::to_string(k + 1) +
            " 1.5\nC c" + std::to_string(k) + " " + std::to_string(k) + " 0 2e-3\n";
  }
  for (auto _ : st) benchmark::DoNotOptimize(print_netlist(parse_netlist(text)));
}
BENCHMARK(BM_NetlistRoundTrip);

}  // namespace

BENCHMARK_MAIN();
