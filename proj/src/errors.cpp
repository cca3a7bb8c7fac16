#include "parapack/errors.hpp"

#include <sstream>

namespace parapack {

namespace {

std::string describe_range(double z) {
  std::ostringstream os;
  os << "SOC " << z << " outside [0,1]";
  return os.str();
}

std::string describe_slope(double z, double slope) {
  std::ostringstream os;
  os << "OCV curve not strictly increasing: slope " << slope << " at z = " << z;
  return os.str();
}

}  // namespace

OcvRangeError::OcvRangeError(double z) : Error(describe_range(z)), z_(z) {}

MonotonicityError::MonotonicityError(double z, double slope)
    : Error(describe_slope(z, slope)), z_(z), slope_(slope) {}

SingularMatrixError::SingularMatrixError(const std::string& what, std::size_t pivot)
    : Error(what + " (pivot " + std::to_string(pivot) + ")"), pivot_(pivot) {}

DivergenceError::DivergenceError(std::size_t step)
    : Error("non-finite state at step " + std::to_string(step)), step_(step) {}

UnstableGainError::UnstableGainError(std::size_t cell, const std::string& detail)
    : Error("kappa block for cell " + std::to_string(cell + 1) + " fails the stability test: " +
            detail),
      cell_(cell) {}

ConfigError::ConfigError(std::string path, const std::string& message)
    : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

}  // namespace parapack
