#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace parapack {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid physical parameter (nonpositive resistance, n < 2, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// SOC argument outside [0,1] while the curve is in strict mode.
class OcvRangeError : public Error {
 public:
  explicit OcvRangeError(double z);
  double z() const noexcept { return z_; }

 private:
  double z_;
};

class MonotonicityError : public Error {
 public:
  MonotonicityError(double z, double slope);
  double z() const noexcept { return z_; }
  double slope() const noexcept { return slope_; }

 private:
  double z_;
  double slope_;
};

// Build-time invariant of the pack model failed; carries the offending entry.
class ModelError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, std::size_t pivot);
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(std::size_t step);
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// A kappa block fails the stability test; names the cell (zero-based).
class UnstableGainError : public Error {
 public:
  UnstableGainError(std::size_t cell, const std::string& detail);
  std::size_t cell() const noexcept { return cell_; }

 private:
  std::size_t cell_;
};

// Config parse or schema failure; `path` is the JSON field path.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace parapack
