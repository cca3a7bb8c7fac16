#include "parapack/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "parapack/errors.hpp"

namespace parapack {

Signal::Signal(Kind kind) : kind_(std::move(kind)) {
  if (const auto* table = std::get_if<TableSignal>(&kind_)) {
    if (table->points.empty()) {
      throw ParameterError("current table is empty");
    }
    for (std::size_t k = 1; k < table->points.size(); ++k) {
      if (!(table->points[k].first > table->points[k - 1].first)) {
        throw ParameterError("current table times must be strictly increasing");
      }
    }
  }
  if (const auto* pulse = std::get_if<PulseSignal>(&kind_)) {
    if (!(pulse->end >= pulse->start)) {
      throw ParameterError("pulse must end after it starts");
    }
  }
}

double Signal::operator()(double t, double reference) const {
  struct Visitor {
    double t;
    double reference;

    double operator()(const ConstantSignal& s) const { return s.value; }
    double operator()(const SineSignal& s) const {
      return s.offset + s.amplitude * std::sin(2.0 * std::numbers::pi * s.frequency * t + s.phase);
    }
    double operator()(const TableSignal& s) const {
      const auto& pts = s.points;
      if (t <= pts.front().first) return pts.front().second;
      if (t >= pts.back().first) return pts.back().second;
      const auto upper = std::upper_bound(pts.begin(), pts.end(), t,
                                          [](double value, const auto& p) { return value < p.first; });
      const auto lower = upper - 1;
      const double frac = (t - lower->first) / (upper->first - lower->first);
      return lower->second + frac * (upper->second - lower->second);
    }
    double operator()(const PulseSignal& s) const {
      return (t >= s.start && t < s.end) ? s.amplitude : 0.0;
    }
    double operator()(const ModulatedSignal& s) const {
      return reference * std::sin(2.0 * std::numbers::pi * s.frequency * t);
    }
  };
  return std::visit(Visitor{t, reference}, kind_);
}

Signal current_sine_preset() { return Signal(ModulatedSignal{1.0}); }
Signal voltage_sine_preset() { return Signal(ModulatedSignal{0.5}); }

}  // namespace parapack
