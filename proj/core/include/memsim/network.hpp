#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace memsim {

enum class ElementKind : std::uint8_t { R, C, L, V, I, M };

char to_char(ElementKind kind);

/// Time-dependent source value: DC or amp * sin(2 pi f t + phase), phase in radians.
struct Waveform {
  enum class Kind : std::uint8_t { DC, SIN };

  Kind kind = Kind::DC;
  double amplitude = 0.0;  // DC level for Kind::DC
  double frequency = 0.0;
  double phase = 0.0;

  static Waveform dc(double value) { return {Kind::DC, value, 0.0, 0.0}; }
  static Waveform sin(double amplitude, double frequency, double phase = 0.0) {
    return {Kind::SIN, amplitude, frequency, phase};
  }

  double value(double t) const;
  double derivative(double t) const;

  bool operator==(const Waveform&) const = default;
};

struct Element {
  ElementKind kind = ElementKind::R;
  std::string name;
  int node_a = 0;  // n+
  int node_b = 0;  // n-
  double value = 0.0;  // resistance, capacitance or inductance
  Waveform waveform;   // V and I sources
  std::string device;  // memristor device reference

  bool operator==(const Element&) const = default;
};

/// Optional initial value for a node voltage or an inductor / source current.
struct InitialValue {
  enum class Kind : std::uint8_t { NodeVoltage, BranchCurrent };

  Kind kind = Kind::NodeVoltage;
  int node = 0;
  std::string branch;
  double value = 0.0;

  bool operator==(const InitialValue&) const = default;
};

struct Netlist {
  std::vector<Element> elements;
  std::vector<InitialValue> initial;

  int max_node() const;
  std::size_t count(ElementKind kind) const;
  const Element* find(const std::string& name) const;
  const Element* memristor() const;

  bool operator==(const Netlist&) const = default;
};

/// Rejects duplicate names, nonpositive R/C/L values, shorted elements,
/// non-contiguous node numbering and dangling nodes. With
/// `require_memristor`, there must be exactly one memristor and both of its
/// terminals must be distinct, non-ground nodes.
void validate_netlist(const Netlist& netlist, bool require_memristor = true);

/// Reduced incidence matrices and element values of the modified nodal analysis.
struct MnaStructure {
  int m = 0;  // non-ground nodes
  Eigen::MatrixXd A_C, A_R, A_L, A_V, A_I;
  Eigen::MatrixXd S;  // m x 2 terminal selection
  Eigen::VectorXd C, G, L;  // capacitances, conductances, inductances
  std::vector<std::string> capacitor_names, resistor_names, inductor_names, vsource_names,
      isource_names;
  std::vector<Waveform> vsource_waveforms, isource_waveforms;
  int terminal_nodes[2] = {0, 0};

  int n_C() const { return static_cast<int>(A_C.cols()); }
  int n_R() const { return static_cast<int>(A_R.cols()); }
  int n_L() const { return static_cast<int>(A_L.cols()); }
  int n_V() const { return static_cast<int>(A_V.cols()); }
  int n_I() const { return static_cast<int>(A_I.cols()); }
  int n() const { return m + n_L() + n_V(); }  // x = (u, i_L, i_V)
};

MnaStructure build_structure(const Netlist& netlist);

/// Outcome of the two topological index-1 tests plus regularity of E - AQ.
struct Index1Report {
  bool no_li_cutset = false;  // ker(S, A_C, A_R, A_V)^T = {0}
  bool no_cv_loop = false;    // ker(Q_CS^T A_V) = {0}
  bool e1_regular = false;
  Eigen::VectorXd li_cutset_witness;  // node-potential vector in the kernel
  Eigen::VectorXd cv_loop_witness;    // source-current vector in the kernel
  double e1_condition = 0.0;

  bool topology_ok() const { return no_li_cutset && no_cv_loop; }
  bool ok() const { return topology_ok() && e1_regular; }
  std::string describe() const;
};

/// Capacitance matrix of a device with unit gradient energy: [[1,-1],[-1,1]].
Eigen::Matrix2d unit_device_capacitance();

Index1Report check_index1(const MnaStructure& structure,
                          const Eigen::Matrix2d& M = unit_device_capacitance());

struct MnaMatrices {
  Eigen::MatrixXd E;
  Eigen::MatrixXd A;
  Eigen::Matrix2d M = Eigen::Matrix2d::Zero();  // device capacitance used in E
};

MnaMatrices assemble_EA(const MnaStructure& structure, const Eigen::Matrix2d& M);

struct Projectors {
  Eigen::MatrixXd P;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd Q_CS;
};

Projectors build_projectors(const MnaStructure& structure);

/// Index-1 decoupling of  E x' = A x + F + s  into y = Px and z = Qx with
/// E_1 = E - AQ and A_1 = AP.
class DecoupledSystem {
 public:
  DecoupledSystem(const MnaStructure& structure, const MnaMatrices& ea, const Projectors& proj);

  int n() const { return static_cast<int>(E_.rows()); }
  int m() const { return m_; }
  int n_L() const { return n_L_; }
  int n_V() const { return n_V_; }

  const Eigen::MatrixXd& E() const { return E_; }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& P() const { return P_; }
  const Eigen::MatrixXd& Q() const { return Q_; }
  const Eigen::MatrixXd& Q_CS() const { return Q_CS_; }
  const Eigen::MatrixXd& E1() const { return E1_; }
  const Eigen::MatrixXd& A1() const { return A1_; }
  const Eigen::MatrixXd& S() const { return S_; }
  const Eigen::Matrix2d& M() const { return M_; }
  double e1_condition() const { return e1_condition_; }

  Eigen::VectorXd e1_solve(const Eigen::VectorXd& rhs) const;

  /// pi: x -> u, and the other blocks of x.
  Eigen::VectorXd u(const Eigen::VectorXd& x) const { return x.head(m_); }
  Eigen::VectorXd i_L(const Eigen::VectorXd& x) const { return x.segment(m_, n_L_); }
  Eigen::VectorXd i_V(const Eigen::VectorXd& x) const { return x.tail(n_V_); }
  Eigen::Vector2d u_D(const Eigen::VectorXd& x) const { return S_.transpose() * x.head(m_); }

  /// pi^T S v: embeds a terminal vector into the node-potential block.
  Eigen::VectorXd embed_terminals(const Eigen::Vector2d& v) const;

  /// E_1 - pi^T S M S^T pi, whose quadratic form on range(P) is the network energy.
  Eigen::MatrixXd energy_matrix() const;

  /// P E_1^{-1} (A_1 y + F + s).
  Eigen::VectorXd rhs(const Eigen::VectorXd& y, const Eigen::VectorXd& F,
                      const Eigen::VectorXd& s) const;

 private:
  int m_, n_L_, n_V_;
  Eigen::MatrixXd E_, A_, P_, Q_, Q_CS_, E1_, A1_, S_;
  Eigen::Matrix2d M_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  double e1_condition_ = 0.0;
};

/// Runs the index-1 check and throws SingularE1 naming the failed condition.
DecoupledSystem build_decoupled(const MnaStructure& structure, const Eigen::Matrix2d& M);

/// s(t) = (A_I i_I(t), 0, v_V(t)).
Eigen::VectorXd source_vector(double t, const MnaStructure& structure);

/// Initial state from the netlist's initial-value lines (zero elsewhere).
Eigen::VectorXd initial_state(const Netlist& netlist, const MnaStructure& structure);

struct ConsistencyResult {
  bool consistent = false;
  double residual = 0.0;  // max-norm of Q x0 - Q E1^{-1}(A1 P x0 + s0), before repair
  Eigen::VectorXd x0;     // repaired state when requested, otherwise the input
};

ConsistencyResult check_consistency(const Eigen::VectorXd& x0, const Eigen::VectorXd& s0,
                                    const DecoupledSystem& sys, double tol = 1e-10,
                                    bool repair = false);

/// Semi-implicit Euler step of  y' = P E_1^{-1}(A_1 y + F + s), A_1 implicit.
class NetworkStepper {
 public:
  NetworkStepper(const DecoupledSystem& sys, double dt);

  double dt() const { return dt_; }
  Eigen::VectorXd advance(const Eigen::VectorXd& y, const Eigen::VectorXd& F,
                          const Eigen::VectorXd& s_next) const;

 private:
  double dt_;
  Eigen::MatrixXd P_;
  Eigen::MatrixXd PE1inv_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

Eigen::VectorXd advance_y(const Eigen::VectorXd& y, const Eigen::VectorXd& F,
                          const Eigen::VectorXd& s_next, double dt, const DecoupledSystem& sys);

/// z = Q E_1^{-1}(A_1 y + s).
Eigen::VectorXd recover_z(const Eigen::VectorXd& y, const Eigen::VectorXd& s,
                          const DecoupledSystem& sys);

/// Smallest eigenvalue of the symmetric part of W restricted to range(P).
double range_definiteness(const DecoupledSystem& sys, const Eigen::MatrixXd& W);

}  // namespace memsim
