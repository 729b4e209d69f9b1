// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tdsl {

enum class ErrorKind {
  InvalidInput,    // malformed arguments or data
  Configuration,   // violated modelling assumption or bad experiment setup
  Construction,    // an object could not be built from valid-looking input
  NonConvergence,  // iterative method ran out of iterations
  Decomposition,   // Cholesky / inversion failure
  Divergence,      // iterates blew up
  Overflow,        // link function left the representable range
  Parse,           // CSV input could not be read
};

const char* to_string(ErrorKind kind) noexcept;

/// Base error for the library. Every failure carries a kind so callers (the
/// CLI in particular) can map it onto an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures that stem from the numbers rather than the request.
  bool is_numeric() const noexcept {
    return kind_ == ErrorKind::NonConvergence || kind_ == ErrorKind::Decomposition ||
           kind_ == ErrorKind::Divergence || kind_ == ErrorKind::Overflow;
  }

 private:
  ErrorKind kind_;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double residual)
      : Error(ErrorKind::NonConvergence, what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error(ErrorKind::Divergence, what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(ErrorKind::Parse, what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace tdsl
