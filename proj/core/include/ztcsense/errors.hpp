#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ztcsense {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed netlist statement, with a 1-based source position.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& message);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string message_;
};

/// Well-formed netlist that violates a circuit invariant.
class SemanticError : public Error {
 public:
  SemanticError(std::size_t line, std::size_t column, const std::string& message);
  explicit SemanticError(const std::string& message);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_ = 0;
  std::size_t column_ = 0;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(int iterations, double residual, const std::string& context,
                   long step = -1);
  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }
  /// Time-step index or sweep grid index that failed; -1 for a plain solve.
  long step() const noexcept { return step_; }

 private:
  int iterations_;
  double residual_;
  long step_;
};

class StepSizeError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class NoZtcError : public Error {
 public:
  using Error::Error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Calibration could not meet its flatness bound; carries the best spread found.
class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& message, double best_spread)
      : Error(message), best_spread_(best_spread) {}
  double best_spread() const noexcept { return best_spread_; }

 private:
  double best_spread_;
};

class SpecError : public Error {
 public:
  using Error::Error;
};

class ProbeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace ztcsense
