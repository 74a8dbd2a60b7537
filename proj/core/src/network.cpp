#include "memsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "memsim/errors.hpp"

namespace memsim {

namespace {

constexpr double kRankTol = 1e-10;

struct Nullspace {
  int rank = 0;
  Eigen::MatrixXd basis;  // orthonormal columns spanning ker(K)
};

// Kernel of K (rows x cols) from the full right singular basis.
Nullspace nullspace(const Eigen::MatrixXd& K, Eigen::Index cols) {
  Nullspace out;
  if (K.rows() == 0 || K.size() == 0) {
    out.basis = Eigen::MatrixXd::Identity(cols, cols);
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(K, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv[0] : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > kRankTol * smax && sv[i] > 0.0) ++rank;
  }
  out.rank = rank;
  out.basis = svd.matrixV().rightCols(cols - rank);
  return out;
}

Eigen::MatrixXd hcat(std::initializer_list<const Eigen::MatrixXd*> blocks, Eigen::Index rows) {
  Eigen::Index cols = 0;
  for (const auto* b : blocks) cols += b->cols();
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index c = 0;
  for (const auto* b : blocks) {
    if (b->cols() > 0) out.middleCols(c, b->cols()) = *b;
    c += b->cols();
  }
  return out;
}

std::string node_label(int node) { return std::to_string(node); }

}  // namespace

char to_char(ElementKind kind) {
  switch (kind) {
    case ElementKind::R: return 'R';
    case ElementKind::C: return 'C';
    case ElementKind::L: return 'L';
    case ElementKind::V: return 'V';
    case ElementKind::I: return 'I';
    case ElementKind::M: return 'M';
  }
  return '?';
}

double Waveform::value(double t) const {
  if (kind == Kind::DC) return amplitude;
  return amplitude * std::sin(2.0 * std::numbers::pi * frequency * t + phase);
}

double Waveform::derivative(double t) const {
  if (kind == Kind::DC) return 0.0;
  const double omega = 2.0 * std::numbers::pi * frequency;
  return amplitude * omega * std::cos(omega * t + phase);
}

int Netlist::max_node() const {
  int n = 0;
  for (const auto& e : elements) n = std::max({n, e.node_a, e.node_b});
  return n;
}

std::size_t Netlist::count(ElementKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      elements.begin(), elements.end(), [kind](const Element& e) { return e.kind == kind; }));
}

const Element* Netlist::find(const std::string& name) const {
  for (const auto& e : elements) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const Element* Netlist::memristor() const {
  for (const auto& e : elements) {
    if (e.kind == ElementKind::M) return &e;
  }
  return nullptr;
}

void validate_netlist(const Netlist& netlist, bool require_memristor) {
  std::set<std::string> names;
  const int max_node = netlist.max_node();
  std::vector<int> degree(static_cast<std::size_t>(max_node) + 1, 0);
  for (const auto& e : netlist.elements) {
    if (e.name.empty()) throw ConfigError("element without a name");
    if (!names.insert(e.name).second) throw ConfigError("duplicate element name '" + e.name + "'");
    if (e.node_a < 0 || e.node_b < 0) {
      throw ConfigError("element '" + e.name + "' has a negative node index");
    }
    if (e.node_a == e.node_b) {
      throw ConfigError("element '" + e.name + "' connects node " + node_label(e.node_a) +
                        " to itself");
    }
    const bool valued =
        e.kind == ElementKind::R || e.kind == ElementKind::C || e.kind == ElementKind::L;
    if (valued && !(e.value > 0.0 && std::isfinite(e.value))) {
      throw ConfigError("element '" + e.name + "' needs a positive finite value");
    }
    ++degree[static_cast<std::size_t>(e.node_a)];
    ++degree[static_cast<std::size_t>(e.node_b)];
  }
  for (int node = 1; node <= max_node; ++node) {
    const int d = degree[static_cast<std::size_t>(node)];
    if (d == 0) {
      throw ConfigError("node numbering is not contiguous: node " + node_label(node) +
                        " is unused");
    }
    if (d < 2) throw ConfigError("dangling node " + node_label(node));
  }
  const std::size_t n_mem = netlist.count(ElementKind::M);
  if (n_mem > 1) throw ConfigError("netlist has more than one memristor");
  if (require_memristor) {
    if (n_mem == 0) throw ConfigError("netlist has no memristor");
    const Element& m = *netlist.memristor();
    if (m.node_a == 0 || m.node_b == 0) {
      throw ConfigError("memristor '" + m.name + "' must connect two non-ground nodes");
    }
  }
}

MnaStructure build_structure(const Netlist& netlist) {
  validate_netlist(netlist, true);
  MnaStructure s;
  s.m = netlist.max_node();
  const int m = s.m;

  auto incidence = [m](ElementKind kind, const Netlist& nl) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(nl.count(kind)));
    Eigen::Index col = 0;
    for (const auto& e : nl.elements) {
      if (e.kind != kind) continue;
      if (e.node_a > 0) A(e.node_a - 1, col) = 1.0;
      if (e.node_b > 0) A(e.node_b - 1, col) = -1.0;
      ++col;
    }
    return A;
  };
  s.A_C = incidence(ElementKind::C, netlist);
  s.A_R = incidence(ElementKind::R, netlist);
  s.A_L = incidence(ElementKind::L, netlist);
  s.A_V = incidence(ElementKind::V, netlist);
  s.A_I = incidence(ElementKind::I, netlist);
  s.C.resize(s.A_C.cols());
  s.G.resize(s.A_R.cols());
  s.L.resize(s.A_L.cols());

  Eigen::Index ic = 0, ir = 0, il = 0;
  for (const auto& e : netlist.elements) {
    switch (e.kind) {
      case ElementKind::R:
        s.G[ir++] = 1.0 / e.value;
        s.resistor_names.push_back(e.name);
        break;
      case ElementKind::C:
        s.C[ic++] = e.value;
        s.capacitor_names.push_back(e.name);
        break;
      case ElementKind::L:
        s.L[il++] = e.value;
        s.inductor_names.push_back(e.name);
        break;
      case ElementKind::V:
        s.vsource_names.push_back(e.name);
        s.vsource_waveforms.push_back(e.waveform);
        break;
      case ElementKind::I:
        s.isource_names.push_back(e.name);
        s.isource_waveforms.push_back(e.waveform);
        break;
      case ElementKind::M:
        s.terminal_nodes[0] = e.node_a;
        s.terminal_nodes[1] = e.node_b;
        break;
    }
  }
  s.S = Eigen::MatrixXd::Zero(m, 2);
  s.S(s.terminal_nodes[0] - 1, 0) = 1.0;
  s.S(s.terminal_nodes[1] - 1, 1) = 1.0;
  return s;
}

Eigen::Matrix2d unit_device_capacitance() {
  Eigen::Matrix2d M;
  M << 1.0, -1.0, -1.0, 1.0;
  return M;
}

MnaMatrices assemble_EA(const MnaStructure& s, const Eigen::Matrix2d& M) {
  const int m = s.m, nL = s.n_L(), nV = s.n_V(), n = s.n();
  if (s.S.rows() != m || s.S.cols() != 2) throw ConfigError("selection matrix has wrong shape");
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff())) {
    throw ConfigError("device capacitance matrix must be symmetric");
  }
  MnaMatrices out;
  out.M = M;
  out.E = Eigen::MatrixXd::Zero(n, n);
  out.A = Eigen::MatrixXd::Zero(n, n);
  out.E.topLeftCorner(m, m) =
      s.A_C * s.C.asDiagonal() * s.A_C.transpose() + s.S * M * s.S.transpose();
  if (nL > 0) out.E.block(m, m, nL, nL) = s.L.asDiagonal();

  out.A.topLeftCorner(m, m) = -s.A_R * s.G.asDiagonal() * s.A_R.transpose();
  if (nL > 0) {
    out.A.block(0, m, m, nL) = -s.A_L;
    out.A.block(m, 0, nL, m) = s.A_L.transpose();
  }
  if (nV > 0) {
    out.A.block(0, m + nL, m, nV) = -s.A_V;
    out.A.block(m + nL, 0, nV, m) = s.A_V.transpose();
  }
  return out;
}

Projectors build_projectors(const MnaStructure& s) {
  const int m = s.m, nV = s.n_V(), n = s.n();
  const Eigen::MatrixXd CS = hcat({&s.A_C, &s.S}, m);
  const Nullspace ns = nullspace(CS.transpose(), m);
  Projectors out;
  out.Q_CS = ns.basis * ns.basis.transpose();
  out.Q = Eigen::MatrixXd::Zero(n, n);
  out.Q.topLeftCorner(m, m) = out.Q_CS;
  if (nV > 0) out.Q.bottomRightCorner(nV, nV).setIdentity();
  out.P = Eigen::MatrixXd::Identity(n, n) - out.Q;
  return out;
}

Index1Report check_index1(const MnaStructure& s, const Eigen::Matrix2d& M) {
  Index1Report r;
  const int m = s.m;

  const Eigen::MatrixXd B = hcat({&s.S, &s.A_C, &s.A_R, &s.A_V}, m);
  const Nullspace li = nullspace(B.transpose(), m);
  r.no_li_cutset = li.basis.cols() == 0;
  if (!r.no_li_cutset) r.li_cutset_witness = li.basis.col(0);

  const Projectors proj = build_projectors(s);
  if (s.n_V() > 0) {
    const Eigen::MatrixXd QA = proj.Q_CS.transpose() * s.A_V;
    const Nullspace cv = nullspace(QA, s.n_V());
    r.no_cv_loop = cv.basis.cols() == 0;
    if (!r.no_cv_loop) r.cv_loop_witness = cv.basis.col(0);
  } else {
    r.no_cv_loop = true;
  }

  const MnaMatrices ea = assemble_EA(s, M);
  const Eigen::MatrixXd E1 = ea.E - ea.A * proj.Q;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(E1);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv[0] : 0.0;
  const double smin = sv.size() > 0 ? sv[sv.size() - 1] : 0.0;
  r.e1_regular = smax > 0.0 && smin > kRankTol * smax;
  r.e1_condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  return r;
}

std::string Index1Report::describe() const {
  std::ostringstream os;
  os << "LI-cutset test: " << (no_li_cutset ? "pass" : "FAIL");
  if (!no_li_cutset) os << " (witness node vector " << li_cutset_witness.transpose() << ")";
  os << "\nCV-loop test: " << (no_cv_loop ? "pass" : "FAIL");
  if (!no_cv_loop) os << " (witness source currents " << cv_loop_witness.transpose() << ")";
  os << "\nE - AQ regular: " << (e1_regular ? "yes" : "NO") << " (condition " << e1_condition
     << ")";
  if (topology_ok() && !e1_regular) {
    os << "\n  memristor terminals share a capacitor-free potential mode; anchor each terminal"
          " with a capacitor";
  }
  return os.str();
}

DecoupledSystem::DecoupledSystem(const MnaStructure& s, const MnaMatrices& ea,
                                 const Projectors& proj)
    : m_(s.m), n_L_(s.n_L()), n_V_(s.n_V()) {
  const int n = s.n();
  if (ea.E.rows() != n || ea.A.rows() != n || proj.P.rows() != n || proj.Q.rows() != n) {
    throw ConfigError("network matrices have inconsistent dimensions");
  }
  E_ = ea.E;
  A_ = ea.A;
  P_ = proj.P;
  Q_ = proj.Q;
  Q_CS_ = proj.Q_CS;
  S_ = s.S;
  M_ = ea.M;
  E1_ = E_ - A_ * Q_;
  A1_ = A_ * P_;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(E1_);
  const auto& sv = svd.singularValues();
  const double smax = sv[0];
  const double smin = sv[sv.size() - 1];
  e1_condition_ = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(smax > 0.0 && smin > kRankTol * smax)) {
    throw SingularE1("E - AQ is singular (condition " + std::to_string(e1_condition_) + ")");
  }
  lu_.compute(E1_);
}

Eigen::VectorXd DecoupledSystem::e1_solve(const Eigen::VectorXd& rhs) const {
  return lu_.solve(rhs);
}

Eigen::VectorXd DecoupledSystem::embed_terminals(const Eigen::Vector2d& v) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n());
  x.head(m_) = S_ * v;
  return x;
}

Eigen::MatrixXd DecoupledSystem::energy_matrix() const {
  Eigen::MatrixXd W = E1_;
  W.topLeftCorner(m_, m_) -= S_ * M_ * S_.transpose();
  return W;
}

Eigen::VectorXd DecoupledSystem::rhs(const Eigen::VectorXd& y, const Eigen::VectorXd& F,
                                     const Eigen::VectorXd& s) const {
  return P_ * e1_solve(A1_ * y + F + s);
}

DecoupledSystem build_decoupled(const MnaStructure& structure, const Eigen::Matrix2d& M) {
  const Index1Report report = check_index1(structure, M);
  if (!report.ok()) throw SingularE1("network is not index 1:\n" + report.describe());
  return DecoupledSystem(structure, assemble_EA(structure, M), build_projectors(structure));
}

Eigen::VectorXd source_vector(double t, const MnaStructure& s) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(s.n());
  if (s.n_I() > 0) {
    Eigen::VectorXd iI(s.n_I());
    for (int k = 0; k < s.n_I(); ++k) iI[k] = s.isource_waveforms[static_cast<std::size_t>(k)].value(t);
    out.head(s.m) = s.A_I * iI;
  }
  for (int k = 0; k < s.n_V(); ++k) {
    out[s.m + s.n_L() + k] = s.vsource_waveforms[static_cast<std::size_t>(k)].value(t);
  }
  return out;
}

Eigen::VectorXd initial_state(const Netlist& netlist, const MnaStructure& s) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(s.n());
  for (const auto& iv : netlist.initial) {
    if (iv.kind == InitialValue::Kind::NodeVoltage) {
      if (iv.node < 1 || iv.node > s.m) {
        throw ConfigError("initial voltage for unknown node " + std::to_string(iv.node));
      }
      x[iv.node - 1] = iv.value;
      continue;
    }
    auto it = std::find(s.inductor_names.begin(), s.inductor_names.end(), iv.branch);
    if (it != s.inductor_names.end()) {
      x[s.m + (it - s.inductor_names.begin())] = iv.value;
      continue;
    }
    it = std::find(s.vsource_names.begin(), s.vsource_names.end(), iv.branch);
    if (it != s.vsource_names.end()) {
      x[s.m + s.n_L() + (it - s.vsource_names.begin())] = iv.value;
      continue;
    }
    throw ConfigError("initial current for '" + iv.branch +
                      "', which is not an inductor or voltage source");
  }
  return x;
}

ConsistencyResult check_consistency(const Eigen::VectorXd& x0, const Eigen::VectorXd& s0,
                                    const DecoupledSystem& sys, double tol, bool repair) {
  if (x0.size() != sys.n() || s0.size() != sys.n()) {
    throw ConfigError("initial state has the wrong dimension");
  }
  const Eigen::VectorXd y0 = sys.P() * x0;
  const Eigen::VectorXd z = recover_z(y0, s0, sys);
  ConsistencyResult out;
  out.residual = (sys.Q() * x0 - z).lpNorm<Eigen::Infinity>();
  out.consistent = out.residual <= tol;
  out.x0 = repair ? Eigen::VectorXd(y0 + z) : x0;
  return out;
}

NetworkStepper::NetworkStepper(const DecoupledSystem& sys, double dt) : dt_(dt), P_(sys.P()) {
  if (!(dt > 0.0)) throw ConfigError("network time step must be positive");
  const int n = sys.n();
  PE1inv_ = sys.P() * sys.E1().partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd K = Eigen::MatrixXd::Identity(n, n) - dt * PE1inv_ * sys.A1();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(K);
  const auto& sv = svd.singularValues();
  if (!(sv[sv.size() - 1] > kRankTol * sv[0])) {
    throw SolverError("network stepping matrix singular for dt = " + std::to_string(dt), 0.0);
  }
  lu_.compute(K);
}

Eigen::VectorXd NetworkStepper::advance(const Eigen::VectorXd& y, const Eigen::VectorXd& F,
                                        const Eigen::VectorXd& s_next) const {
  const Eigen::VectorXd rhs = y + dt_ * PE1inv_ * (F + s_next);
  return P_ * lu_.solve(rhs);
}

Eigen::VectorXd advance_y(const Eigen::VectorXd& y, const Eigen::VectorXd& F,
                          const Eigen::VectorXd& s_next, double dt, const DecoupledSystem& sys) {
  return NetworkStepper(sys, dt).advance(y, F, s_next);
}

Eigen::VectorXd recover_z(const Eigen::VectorXd& y, const Eigen::VectorXd& s,
                          const DecoupledSystem& sys) {
  return sys.Q() * sys.e1_solve(sys.A1() * y + s);
}

double range_definiteness(const DecoupledSystem& sys, const Eigen::MatrixXd& W) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(0.5 * (sys.P() + sys.P().transpose()));
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < ep.eigenvalues().size(); ++i) {
    if (ep.eigenvalues()[i] > 0.5) cols.push_back(i);
  }
  if (cols.empty()) return std::numeric_limits<double>::infinity();
  Eigen::MatrixXd B(sys.n(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    B.col(static_cast<Eigen::Index>(k)) = ep.eigenvectors().col(cols[k]);
  }
  const Eigen::MatrixXd Wr = B.transpose() * (0.5 * (W + W.transpose())) * B;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ew(Wr);
  return ew.eigenvalues().minCoeff();
}

}  // namespace memsim
