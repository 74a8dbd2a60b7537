#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace memsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid geometry, device or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Netlist or config text could not be parsed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Linear solve failed or did not reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Gummel iteration ran out of sweeps; usually the time step is too large.
class MaxIterExceeded : public Error {
 public:
  MaxIterExceeded(int iterations, double residual)
      : Error("Gummel iteration did not converge in " + std::to_string(iterations) +
              " sweeps (last potential change " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// The network matrix E - AQ is singular: the circuit is not index 1.
class SingularE1 : public Error {
 public:
  using Error::Error;
};

/// Initial network state does not satisfy the algebraic constraint.
class InconsistentInitialState : public Error {
 public:
  InconsistentInitialState(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace memsim
