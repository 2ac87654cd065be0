#include "ztcsense/errors.hpp"

#include <cstdio>

namespace ztcsense {

namespace {

std::string positioned(std::size_t line, std::size_t column, const std::string& message) {
  return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message;
}

}  // namespace

SyntaxError::SyntaxError(std::size_t line, std::size_t column, const std::string& message)
    : Error(positioned(line, column, message)), line_(line), column_(column), message_(message) {}

SemanticError::SemanticError(std::size_t line, std::size_t column, const std::string& message)
    : Error(positioned(line, column, message)), line_(line), column_(column) {}

SemanticError::SemanticError(const std::string& message) : Error(message) {}

ConvergenceError::ConvergenceError(int iterations, double residual, const std::string& context,
                                   long step)
    : Error([&] {
        char buf[96];
        std::snprintf(buf, sizeof buf, " (iterations=%d, residual=%.3e A)", iterations, residual);
        std::string msg = context + buf;
        if (step >= 0) msg += " at step " + std::to_string(step);
        return msg;
      }()),
      iterations_(iterations),
      residual_(residual),
      step_(step) {}

}  // namespace ztcsense
