#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mkvlab/core/vec.hpp"

namespace mkvlab {

// Base of every error thrown by the library. `exit_code()` follows the CLI
// contract: 2 for configuration problems, 3 for numeric failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const { return 3; }
};

class ParameterError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class CoverageError : public Error {
 public:
  CoverageError(const std::string& what, std::vector<std::size_t> offending)
      : Error(what), offending_(std::move(offending)) {}
  const std::vector<std::size_t>& offending() const { return offending_; }

 private:
  std::vector<std::size_t> offending_;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class CollisionError : public SingularityError {
 public:
  CollisionError(const std::string& what, std::size_t step, std::size_t a, std::size_t b)
      : SingularityError(what), step_(step), first_(a), second_(b) {}
  std::size_t step() const { return step_; }
  std::size_t first() const { return first_; }
  std::size_t second() const { return second_; }

 private:
  std::size_t step_;
  std::size_t first_;
  std::size_t second_;
};

class OverflowError : public Error {
 public:
  OverflowError(const std::string& what, double t, Vec x) : Error(what), t_(t), x_(x) {}
  double time() const { return t_; }
  const Vec& state() const { return x_; }

 private:
  double t_;
  Vec x_;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double lower, double upper)
      : Error(what), lower_(lower), upper_(upper) {}
  double lower_bound() const { return lower_; }
  double upper_bound() const { return upper_; }

 private:
  double lower_;
  double upper_;
};

}  // namespace mkvlab
