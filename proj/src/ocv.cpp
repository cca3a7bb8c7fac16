#include "parapack/ocv.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "parapack/errors.hpp"

namespace parapack {

OcvCurve::OcvCurve(std::vector<double> coefficients) : coefficients_(std::move(coefficients)) {
  if (coefficients_.size() < 2) {
    throw ParameterError("OCV polynomial needs degree >= 1");
  }
  for (double a : coefficients_) {
    if (!std::isfinite(a)) {
      throw ParameterError("OCV coefficient is not finite");
    }
  }
}

double OcvCurve::argument(double z, OcvDomain domain) const {
  if (z >= 0.0 && z <= 1.0) {
    return z;
  }
  switch (domain) {
    case OcvDomain::strict:
      throw OcvRangeError(z);
    case OcvDomain::clamp:
      return std::clamp(z, 0.0, 1.0);
    case OcvDomain::extrapolate:
      break;
  }
  return z;
}

double OcvCurve::eval(double z, OcvDomain domain) const {
  const double s = argument(z, domain);
  double acc = 0.0;
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) {
    acc = acc * s + *it;
  }
  return acc;
}

double OcvCurve::slope(double z, OcvDomain domain) const {
  const double s = argument(z, domain);
  double acc = 0.0;
  for (std::size_t k = coefficients_.size() - 1; k >= 1; --k) {
    acc = acc * s + static_cast<double>(k) * coefficients_[k];
  }
  return acc;
}

namespace {

// Golden-section search for the minimiser of f on [a,b].
double golden_minimize(const std::function<double(double)>& f, double a, double b,
                       double tolerance) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tolerance) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

struct Extremum {
  double z;
  double value;
};

Extremum refine(const std::function<double(double)>& f, std::size_t best, std::size_t samples,
                double tolerance) {
  const double h = 1.0 / static_cast<double>(samples);
  const double lo = best == 0 ? 0.0 : static_cast<double>(best - 1) * h;
  const double hi = best == samples ? 1.0 : static_cast<double>(best + 1) * h;
  const double z_grid = static_cast<double>(best) * h;
  const double z_refined = golden_minimize(f, lo, hi, tolerance);
  // Endpoint minima are common (e.g. the maximum slope at z = 0), keep the better one.
  if (f(z_refined) < f(z_grid)) {
    return {z_refined, f(z_refined)};
  }
  return {z_grid, f(z_grid)};
}

}  // namespace

SlopeBounds slope_bounds(const OcvCurve& curve, std::size_t samples, double tolerance) {
  if (samples < 2) {
    throw ParameterError("slope_bounds needs at least two samples");
  }
  const double h = 1.0 / static_cast<double>(samples);
  std::size_t imin = 0;
  std::size_t imax = 0;
  double vmin = curve.slope(0.0);
  double vmax = vmin;
  for (std::size_t i = 1; i <= samples; ++i) {
    const double z = std::min(1.0, static_cast<double>(i) * h);
    const double s = curve.slope(z);
    if (s < vmin) {
      vmin = s;
      imin = i;
    }
    if (s > vmax) {
      vmax = s;
      imax = i;
    }
  }

  const auto slope = [&curve](double z) { return curve.slope(std::clamp(z, 0.0, 1.0)); };
  const auto neg_slope = [&curve](double z) { return -curve.slope(std::clamp(z, 0.0, 1.0)); };
  const Extremum lo = refine(slope, imin, samples, tolerance);
  const Extremum hi = refine(neg_slope, imax, samples, tolerance);

  if (lo.value <= 0.0) {
    throw MonotonicityError(lo.z, lo.value);
  }
  return SlopeBounds{lo.value, -hi.value, lo.z, hi.z};
}

}  // namespace parapack
