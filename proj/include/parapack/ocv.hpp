#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace parapack {

// How arguments outside [0,1] are treated.
enum class OcvDomain {
  strict,       // throw OcvRangeError
  clamp,        // evaluate at the nearest endpoint
  extrapolate,  // evaluate the polynomial as is
};

/// Open-circuit voltage as a polynomial in SOC, coefficients a0 first.
///
/// Immutable after construction. The constructor only checks the shape of the
/// coefficient list; monotonicity is certified separately by slope_bounds().
class OcvCurve {
 public:
  explicit OcvCurve(std::vector<double> coefficients);

  double eval(double z, OcvDomain domain = OcvDomain::strict) const;
  double slope(double z, OcvDomain domain = OcvDomain::strict) const;

  std::span<const double> coefficients() const noexcept { return coefficients_; }
  std::size_t degree() const noexcept { return coefficients_.size() - 1; }

 private:
  double argument(double z, OcvDomain domain) const;

  std::vector<double> coefficients_;
};

struct SlopeBounds {
  double lower;
  double upper;
  double argmin;  // SOC where the minimum slope is attained
  double argmax;
};

/// Certified min/max of the slope over [0,1]: dense sampling followed by
/// golden-section refinement on the bracketing intervals.
///
/// Throws MonotonicityError when the minimum slope is <= 0.
SlopeBounds slope_bounds(const OcvCurve& curve, std::size_t samples = 10000,
                         double tolerance = 1e-8);

}  // namespace parapack
