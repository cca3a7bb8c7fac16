#pragma once

#include <memory>
#include <utility>
#include <variant>
#include <vector>

namespace parapack {

struct ConstantSignal {
  double value = 0.0;
};

// offset + amplitude * sin(2 pi frequency t + phase)
struct SineSignal {
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  double offset = 0.0;
};

// Piecewise-linear through (t, value) samples; held constant outside the table.
struct TableSignal {
  std::vector<std::pair<double, double>> points;
};

// amplitude on [start, end), zero elsewhere.
struct PulseSignal {
  double amplitude = 0.0;
  double start = 0.0;
  double end = 0.0;
};

// reference(t) * sin(2 pi frequency t), e.g. a disturbance proportional to the
// applied current.
struct ModulatedSignal {
  double frequency = 0.0;
};

/// Scalar time signal used for applied currents and disturbances.
class Signal {
 public:
  using Kind = std::variant<ConstantSignal, SineSignal, TableSignal, PulseSignal, ModulatedSignal>;

  Signal() : kind_(ConstantSignal{}) {}
  Signal(Kind kind);  // NOLINT(google-explicit-constructor)

  static Signal zero() { return Signal(ConstantSignal{0.0}); }
  static Signal constant(double value) { return Signal(ConstantSignal{value}); }

  /// Value at t; `reference` is the signal a ModulatedSignal multiplies.
  double operator()(double t, double reference = 0.0) const;

  bool is_modulated() const noexcept { return std::holds_alternative<ModulatedSignal>(kind_); }
  const Kind& kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

using CurrentProfile = Signal;

// Disturbances on the applied current (amps) and on the measured voltage (volts).
struct Disturbance {
  Signal current = Signal::zero();
  Signal voltage = Signal::zero();
};

// d_I = I(t) sin(2 pi t), d_v = I(t) sin(pi t).
Signal current_sine_preset();
Signal voltage_sine_preset();

}  // namespace parapack
