#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rootflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that do not compose (matrix sizes, input arity, cache layout).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A structural invariant does not hold (cyclic graph, non-permutation, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DegenerateColumnError : public Error {
 public:
  DegenerateColumnError(std::size_t column, const std::string& what)
      : Error(what), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t column, const std::string& what)
      : Error(what), row_(row), column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// Optimization produced a non-finite loss. `step` counts Adam steps from 0.
class TrainingError : public Error {
 public:
  TrainingError(std::size_t step, const std::string& what)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace rootflow
