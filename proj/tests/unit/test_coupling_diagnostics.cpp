#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <memory>

#include <Eigen/Eigenvalues>

#include "generators.hpp"
#include "memsim/coupling.hpp"
#include "memsim/diagnostics.hpp"
#include "memsim/netlist_io.hpp"

using namespace memsim;
using memsim::testing::Gen;

namespace {

struct Device {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const EllipticOperator> op;
  CellField doping;
  std::unique_ptr<CouplingOperators> ops;
};

Device make_device(int nx, int ny, double lambda2, const CellField* doping = nullptr,
                   DomainSpec spec = DomainSpec::unit_square()) {
  Device d;
  d.mesh = std::make_shared<const Mesh>(build_mesh(spec, nx, ny));
  d.op = std::make_shared<const EllipticOperator>(d.mesh, lambda2, TagSet::terminals());
  d.doping = doping ? *doping : d.mesh->zeros_cells();
  d.ops = std::make_unique<CouplingOperators>(d.op, d.doping,
                                              built_in_potential(*d.mesh, d.doping, 1.0));
  return d;
}

// Uniform vector field (jx, jy) as a normal face field.
FaceField uniform_field(const Mesh& mesh, double jx, double jy) {
  FaceField J(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    J[f] = face.normal_sign * (face.axis == Axis::X ? jx : jy);
  }
  return J;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double clip(double w, double k) { return std::min(w, k); }

// Simpson on [a, b] with a breakpoint at `kink` when it lies inside.
double simpson_split(const std::function<double(double)>& f, double a, double b, double kink,
                     int n = 2000) {
  if (a < kink && kink < b) return simpson(f, a, kink, n) + simpson(f, kink, b, n);
  return simpson(f, a, b, n);
}

DecoupledSystem reference_system(const Eigen::Matrix2d& M) {
  const Netlist n = parse_netlist(
      "V v1 1 0 DC 1\nR r1 1 2 1\nC c1 2 0 1\nM m1 2 3 device=x.cfg\nC c2 3 0 2\nL l1 3 0 1\n");
  return build_decoupled(build_structure(n), M);
}

}  // namespace

TEST(BuiltInPotential, AsinhValuesAndTrace) {
  Gen g(3);
  const auto mesh = build_mesh(DomainSpec::unit_square(), 6, 5);
  const CellField A = g.vector(mesh.num_cells(), -4.0, 4.0);
  const BuiltInPotential v = built_in_potential(mesh, A, 0.5);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double a = A[c] / 1.0;
    EXPECT_NEAR(v.cells[c], std::log(a + std::sqrt(a * a + 1.0)), 1e-14);
  }
  for (int f = mesh.first_boundary_face(); f < mesh.num_faces(); ++f) {
    EXPECT_EQ(v.trace[f], v.cells[mesh.face(f).owner]);
  }
  EXPECT_THROW(built_in_potential(mesh, A, 0.0), ConfigError);
  EXPECT_THROW(built_in_potential(mesh, CellField::Zero(3), 1.0), ConfigError);
}

TEST(CouplingOperators, CapacitanceMatrixProperties) {
  Gen g(17);
  for (int trial = 0; trial < 6; ++trial) {
    const int nx = g.integer(3, 14), ny = g.integer(3, 14);
    const double lambda2 = g.uniform(0.05, 3.0);
    const CellField A = g.vector(nx * ny, -2.0, 2.0);
    const Device d = make_device(nx, ny, lambda2, &A);
    const Eigen::Matrix2d M = d.ops->M();
    EXPECT_EQ(M(0, 1), M(1, 0));
    EXPECT_NEAR(M.row(0).sum(), 0.0, 1e-11 * M(0, 0));
    EXPECT_NEAR(M.row(1).sum(), 0.0, 1e-11 * M(1, 1));
    const Eigen::Vector2d eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(M).eigenvalues();
    EXPECT_GT(eig.minCoeff(), -1e-12 * eig.maxCoeff());
    EXPECT_NEAR(M(0, 0), lambda2, 1e-11 * lambda2);
  }
}

TEST(CouplingOperators, UniformCurrentOracle) {
  Gen g(5);
  for (int trial = 0; trial < 5; ++trial) {
    const double j = g.uniform(-3.0, 3.0), jy = g.uniform(-3.0, 3.0);
    const Device d = make_device(g.integer(3, 12), g.integer(3, 12), g.uniform(0.1, 2.0));
    const Eigen::Vector2d sI = d.ops->script_I(uniform_field(*d.mesh, j, jy));
    EXPECT_NEAR(sI[0], j, 1e-12);
    EXPECT_NEAR(sI[1], -j, 1e-12);
  }
}

TEST(CouplingOperators, DisplacementFieldCarriesNoTerminalCurrent) {
  Gen g(6);
  const Device d = make_device(10, 8, 0.4);
  for (int trial = 0; trial < 5; ++trial) {
    const CellField rho = g.vector(d.mesh->num_cells(), -1.0, 1.0);
    const FaceField J = d.op->lambda2() * green_apply(*d.op, rho).gradient;
    EXPECT_LT(d.ops->script_I(J).lpNorm<Eigen::Infinity>(), 1e-11);
  }
}

TEST(CouplingOperators, ScriptILinearAndBalanced) {
  Gen g(7);
  const CellField A = g.vector(9 * 7, -1.0, 1.0);
  const Device d = make_device(9, 7, 0.7, &A);
  const int nf = d.mesh->num_faces();
  for (int trial = 0; trial < 20; ++trial) {
    const FaceField J1 = g.vector(nf, -1.0, 1.0);
    const FaceField J2 = g.vector(nf, -1.0, 1.0);
    const double a = g.uniform(-2, 2), b = g.uniform(-2, 2);
    const Eigen::Vector2d s1 = d.ops->script_I(J1), s2 = d.ops->script_I(J2);
    EXPECT_LT((d.ops->script_I(a * J1 + b * J2) - a * s1 - b * s2).norm(), 1e-11);
    EXPECT_NEAR(s1.sum(), 0.0, 1e-11);
  }
  EXPECT_THROW(d.ops->script_I(FaceField::Zero(3)), ConfigError);
}

TEST(CouplingOperators, BoundaryPotentialAndLift) {
  Gen g(8);
  const CellField A = g.vector(8 * 6, 0.0, 3.0);
  const Device d = make_device(8, 6, 0.5, &A);
  const Eigen::Vector2d u(0.7, -0.3);
  const FaceField vbar = d.ops->boundary_potential(u);
  for (int f = d.mesh->first_boundary_face(); f < d.mesh->num_faces(); ++f) {
    const Face& face = d.mesh->face(f);
    const double vbi = d.ops->built_in().trace[f];
    if (face.tag == BoundaryTag::D1) EXPECT_DOUBLE_EQ(vbar[f], u[0] + vbi);
    if (face.tag == BoundaryTag::D2) EXPECT_DOUBLE_EQ(vbar[f], u[1] + vbi);
    if (face.tag == BoundaryTag::N) EXPECT_EQ(vbar[f], 0.0);
  }
  const CellField lift = d.ops->potential_lift(u);
  const auto& w = d.ops->decomposition().weights;
  EXPECT_LT((lift - d.ops->built_in().cells - 0.7 * w[0] + 0.3 * w[1]).norm(), 1e-13);

  const Device neutral = make_device(8, 6, 0.5);
  const CellField flat = neutral.ops->potential_lift({0.4, 0.4});
  EXPECT_LT((flat.array() - 0.4).abs().maxCoeff(), 1e-12);
}

TEST(CouplingOperators, RejectsNonTerminalDirichletSet) {
  const auto mesh = std::make_shared<const Mesh>(build_mesh(DomainSpec::unit_square(), 4, 4));
  const auto op = std::make_shared<const EllipticOperator>(mesh, 1.0, TagSet{BoundaryTag::D1});
  const CellField A = mesh->zeros_cells();
  EXPECT_THROW(CouplingOperators(op, A, built_in_potential(*mesh, A, 1.0)), ConfigError);
  EXPECT_THROW(CouplingOperators(nullptr, A, built_in_potential(*mesh, A, 1.0)), ConfigError);
}

TEST(Coupling, TerminalCurrentsAndNetworkLoad) {
  const Eigen::Matrix2d M{{2.0, -2.0}, {-2.0, 2.0}};
  const Eigen::Vector2d I = terminal_currents({0.5, -0.5}, M, {1.0, 0.25});
  EXPECT_DOUBLE_EQ(I[0], 2.0 - 0.5 + 0.5);
  EXPECT_DOUBLE_EQ(I[1], -2.0 + 0.5 - 0.5);

  const DecoupledSystem sys = reference_system(M);
  const Eigen::VectorXd F = compute_F({0.3, -0.3}, sys);
  ASSERT_EQ(F.size(), sys.P().rows());
  EXPECT_DOUBLE_EQ(F[1], -0.3);
  EXPECT_DOUBLE_EQ(F[2], 0.3);
  EXPECT_EQ(F.sum(), 0.0);
}

TEST(Coupling, DriveMode) {
  DriveWaveform w{Waveform::sin(2.0, 0.25), Waveform::dc(-1.0)};
  const Eigen::Vector2d u = drive_mode(w, 1.0);
  EXPECT_NEAR(u[0], 2.0, 1e-15);
  EXPECT_EQ(u[1], -1.0);
  const Eigen::Vector2d r = drive_rate(w, 0.0);
  EXPECT_NEAR(r[0], 2.0 * 2.0 * M_PI * 0.25, 1e-14);
  EXPECT_EQ(r[1], 0.0);
}

TEST(EnergyFunctions, MatchNestedQuadrature) {
  Gen g(21);
  for (int trial = 0; trial < 12; ++trial) {
    EnergyFunctions fn;
    fn.alpha = g.uniform(0.05, 1.0);
    fn.k = g.coin() ? g.uniform(1.2, 4.0) : std::numeric_limits<double>::infinity();
    const double k = fn.k, alpha = fn.alpha;
    auto inv = [&](double w) { return 1.0 / (clip(w, k) + alpha); };
    auto inner = [&](double v) {
      return v >= 1.0 ? simpson_split(inv, 1.0, v, k, 400) : -simpson_split(inv, v, 1.0, k, 400);
    };
    const double u = g.uniform(0.0, 6.0);
    EXPECT_NEAR(fn.g(u), simpson_split(inner, 0.0, u, k, 400), 1e-8) << "u=" << u << " k=" << k;
    const double h_oracle = simpson_split(
        [&](double w) { return 1.0 / std::sqrt(clip(w, k) + alpha); }, 0.0, u, k);
    EXPECT_NEAR(fn.h(u), h_oracle, 1e-9);
  }
}

TEST(EnergyFunctions, UntruncatedClosedForms) {
  const EnergyFunctions fn;
  Gen g(22);
  for (int trial = 0; trial < 50; ++trial) {
    const double u = g.uniform(1e-6, 20.0);
    EXPECT_NEAR(fn.g(u), u * (std::log(u) - 1.0), 1e-12 * (1.0 + std::abs(u * std::log(u))));
    EXPECT_NEAR(fn.h(u), 2.0 * std::sqrt(u), 1e-13);
    const double ub = g.uniform(1e-3, 10.0);
    EXPECT_NEAR(fn.G(u, ub), u * std::log(u / ub) - u + ub, 1e-11 * (1.0 + u + ub));
  }
  EXPECT_EQ(fn.g(0.0), 0.0);
}

TEST(EnergyFunctions, RelativeEntropyIsNonnegative) {
  Gen g(23);
  for (int trial = 0; trial < 500; ++trial) {
    EnergyFunctions fn;
    fn.k = g.coin() ? g.uniform(0.5, 5.0) : std::numeric_limits<double>::infinity();
    fn.alpha = g.coin() ? 0.0 : g.uniform(0.0, 1.0);
    const double u = g.uniform(0.0, 10.0), ub = g.uniform(1e-3, 10.0);
    EXPECT_GE(fn.G(u, ub), -1e-12 * (1.0 + u + ub));
    EXPECT_EQ(fn.G(ub, ub), 0.0);
  }
}

TEST(EnergyFunctions, TruncationInactiveBelowLevel) {
  Gen g(24);
  EnergyFunctions plain, cut;
  cut.k = 7.5;
  for (int trial = 0; trial < 200; ++trial) {
    const double u = g.uniform(0.0, 7.5), ub = g.uniform(0.1, 7.5);
    EXPECT_EQ(cut.g(u), plain.g(u));
    EXPECT_EQ(cut.G(u, ub), plain.G(u, ub));
    EXPECT_EQ(cut.h(u), plain.h(u));
  }
  EXPECT_GT(cut.g(30.0), plain.g(30.0));
}

TEST(FreeEnergy, VanishesAtReferenceState) {
  Gen g(30);
  const CellField A = g.vector(10 * 9, 0.2, 2.0);
  const Device d = make_device(10, 9, 0.3, &A);
  const ReferenceFields refs = make_reference_fields(*d.ops, {1.0, 2.0}, {0.5, 0.5}, {0.0, 0.0});
  const DeviceState s{refs.n, refs.p, refs.D};
  const EnergyReport e = free_energy(*d.mesh, 0.3, s, refs.V_A, refs, {0.0, 0.0}, nullptr, nullptr);
  EXPECT_NEAR(e.total, 0.0, 1e-13);
  EXPECT_EQ(e.network, 0.0);

  DeviceState bumped = s;
  bumped.D *= 1.5;
  const EnergyReport b =
      free_energy(*d.mesh, 0.3, bumped, refs.V_A, refs, {0.0, 0.0}, nullptr, nullptr);
  EXPECT_GT(b.internal, 0.0);

  const Eigen::Vector2d u(0.3, -0.2);
  const ReferenceFields r2 = make_reference_fields(*d.ops, {1.0, 2.0}, {0.5, 0.5}, u);
  const CellField V = r2.V_A + u[0] * d.ops->decomposition().weights[0] +
                      u[1] * d.ops->decomposition().weights[1];
  const EnergyReport e2 = free_energy(*d.mesh, 0.3, DeviceState{r2.n, r2.p, r2.D}, V, r2, u,
                                      nullptr, nullptr);
  EXPECT_GT(e2.electric, 0.0);
  EXPECT_NEAR(e2.electric, 0.5 * u.dot(d.ops->M() * u), 1e-10);

  EXPECT_THROW(make_reference_fields(*d.ops, {0.0, 1.0}, {1.0, 1.0}, u), ConfigError);
}

TEST(FreeEnergy, NetworkPartIsQuadratic) {
  const Device d = make_device(6, 6, 1.0);
  const DecoupledSystem sys = reference_system(d.ops->M());
  const ReferenceFields refs = make_reference_fields(*d.ops, {1.0, 1.0}, {1.0, 1.0}, {0.0, 0.0});
  const DeviceState s{refs.n, refs.p, refs.D};
  Gen g(31);
  const Eigen::VectorXd x = g.vector(static_cast<int>(sys.P().rows()), -1.0, 1.0);
  const Eigen::VectorXd y = sys.P() * x;
  const Eigen::VectorXd y2 = 2.0 * y;
  const double e1 = free_energy(*d.mesh, 1.0, s, refs.V_A, refs, {0, 0}, &sys, &y).network;
  const double e2 = free_energy(*d.mesh, 1.0, s, refs.V_A, refs, {0, 0}, &sys, &y2).network;
  EXPECT_GT(e1, 0.0);
  EXPECT_NEAR(e2, 4.0 * e1, 1e-12 * e2);
}

TEST(Dissipation, NonnegativeAndZeroAtRest) {
  Gen g(40);
  const auto mesh = build_mesh(DomainSpec::unit_square(), 7, 6);
  for (int trial = 0; trial < 20; ++trial) {
    const DeviceState s{g.vector(42, 0.0, 3.0), g.vector(42, 0.0, 3.0), g.vector(42, 0.0, 3.0)};
    const CellField V = g.vector(42, -2.0, 2.0);
    const FaceField vbar = g.vector(mesh.num_faces(), -1, 1);
    const Eigen::Vector3d dd = dissipation(mesh, s, V, vbar, terminal_values(mesh, 1, 2),
                                           terminal_values(mesh, 0.5, 0.5));
    EXPECT_GE(dd.minCoeff(), 0.0);
  }
  const CellField one = CellField::Ones(42);
  const DeviceState rest{one, one, one};
  const Eigen::Vector3d z =
      dissipation(mesh, rest, 0.2 * one, terminal_values(mesh, 0.2, 0.2),
                  terminal_values(mesh, 1, 1), terminal_values(mesh, 1, 1));
  EXPECT_LT(z.norm(), 1e-15);
}

TEST(Dissipation, LinearSquareRootProfile) {
  for (int N : {4, 9, 16}) {
    const auto mesh = build_mesh(DomainSpec::unit_square(), N, N);
    CellField c(mesh.num_cells());
    for (int k = 0; k < mesh.num_cells(); ++k) c[k] = std::pow(1.0 + mesh.center_x(k), 2);
    const CellField V = mesh.zeros_cells();
    const FaceField cb = terminal_values(mesh, 1.0, 4.0);
    const Eigen::Vector3d dd =
        dissipation(mesh, DeviceState{c, c, c}, V, mesh.zeros_faces(), cb, cb);
    EXPECT_NEAR(dd[0], 4.0, 1e-12);
    EXPECT_NEAR(dd[1], 4.0, 1e-12);
    EXPECT_NEAR(dd[2], 4.0 * (N - 1) / N, 1e-12);
  }
}

TEST(Bounds, MonitorConstants) {
  const CellField c = CellField::Constant(4, 0.5);
  const DeviceState s{c, 2 * c, 3 * c};
  const BoundsReport r = bounds_monitor(s, 0.25, 0.4, 0.3, 3.0, 1.0, 1.0);
  EXPECT_EQ(r.mu, 8.0);
  EXPECT_EQ(r.m0, 0.3);
  EXPECT_NEAR(r.threshold, 0.3 * std::exp(-2.0), 1e-16);
  EXPECT_EQ(r.minima, Eigen::Vector3d(0.5, 1.0, 1.5));
  EXPECT_TRUE(r.satisfied);
  EXPECT_FALSE(bounds_monitor(s, 0.0, 1.0, 0.9, 3.0, 1.0, 1.0).satisfied);
  EXPECT_THROW(bounds_monitor(s, 0.0, 0.0, 0.9, 3.0, 1.0, 1.0), ConfigError);
  EXPECT_EQ(min_density(s), 0.5);
  EXPECT_EQ(max_density(s), 1.5);
}

TEST(Conservation, ReportFromRecords) {
  EXPECT_THROW(conservation_report({}), ConfigError);
  EXPECT_THROW(conservation_report({StepRecord{}}), ConfigError);
  StepRecord a, b;
  a.mass = {2.0, 3.0, 4.0};
  a.I_D = {1.0, -1.0};
  b.t = b.dt = 0.5;
  b.mass = {2.5, 2.0, 4.0 + 4e-12};
  b.inflow_n = 1.0;
  b.inflow_p = -2.0;
  b.I_D = {2.0, -1.5};
  const ConservationReport r = conservation_report({a, b});
  EXPECT_NEAR(r.max_D_drift, 1e-12, 1e-15);
  EXPECT_EQ(r.max_n_balance, 0.0);
  EXPECT_EQ(r.max_p_balance, 0.0);
  EXPECT_EQ(r.max_charge_imbalance, 0.25);
}

TEST(Diagnostics, BoundaryFluxOfUniformField) {
  const auto mesh = build_mesh(DomainSpec::rectangle(2.0, 1.0), 8, 5);
  EXPECT_NEAR(boundary_flux(mesh, uniform_field(mesh, 1.5, -0.5)), 0.0, 1e-14);
  FaceField out = mesh.zeros_faces();
  for (int f = mesh.first_boundary_face(); f < mesh.num_faces(); ++f) out[f] = 1.0;
  EXPECT_NEAR(boundary_flux(mesh, out), 6.0, 1e-14);
}
