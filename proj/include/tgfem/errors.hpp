#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tgfem {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidSubdivision : public Error {
public:
  using Error::Error;
};

/// The interface box does not coincide with grid lines of the subdivision.
class InterfaceNotResolved : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string &what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class DegenerateTriangle : public Error {
public:
  using Error::Error;
};

class NotAVertex : public Error {
public:
  using Error::Error;
};

class NoFiniteBarrier : public Error {
public:
  using Error::Error;
};

class UnknownProblem : public Error {
public:
  using Error::Error;
};

/// Iterative solver ran out of iterations; carries the best iterate seen.
class NoConvergence : public Error {
public:
  NoConvergence(const std::string &what, std::vector<double> best)
      : Error(what), best_(std::move(best)) {}
  [[nodiscard]] const std::vector<double> &best_iterate() const noexcept { return best_; }

private:
  std::vector<double> best_;
};

class LineSearchStall : public Error {
public:
  using Error::Error;
};

class NotNested : public Error {
public:
  using Error::Error;
};

class InvalidRegularity : public Error {
public:
  using Error::Error;
};

class ZeroError : public Error {
public:
  using Error::Error;
};

class BoundaryNotZero : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace tgfem
