#include "parapack/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "parapack/errors.hpp"

namespace parapack {

namespace {

constexpr double kCurrentBalanceTolerance = 1e-8;

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

std::vector<std::string> trace_header(std::size_t cells, bool with_estimator) {
  std::vector<std::string> cols{"t"};
  const auto series = [&](const char* prefix) {
    for (std::size_t k = 1; k <= cells; ++k) cols.push_back(prefix + std::to_string(k));
  };
  series("z_");
  series("w_");
  series("i_");
  cols.emplace_back("v");
  if (with_estimator) {
    series("zhat_");
    series("what_");
    cols.emplace_back("e_norm");
    cols.emplace_back("v_err");
  }
  return cols;
}

void write_trace_csv(std::ostream& out, const SimulationTrace& trace, std::size_t stride) {
  if (stride == 0) throw Error("trace stride must be positive");
  const auto n = static_cast<Eigen::Index>(trace.cells);
  const bool with_estimator = trace.estimator.has_value();
  const auto header = trace_header(trace.cells, with_estimator);
  for (std::size_t c = 0; c < header.size(); ++c) {
    out << (c ? "," : "") << header[c];
  }
  out << '\n';

  std::string row;
  for (std::size_t s = 0; s < trace.size(); ++s) {
    const Vector& x = trace.states[s];
    const Vector& i = trace.currents[s];
    const double imbalance = std::abs(i.sum() - trace.pack_current[s]);
    if (!(imbalance <= kCurrentBalanceTolerance)) {
      std::ostringstream os;
      os << "branch currents at row " << s << " miss the applied current by " << imbalance;
      throw Error(os.str());
    }
    if (s % stride != 0 && s + 1 != trace.size()) continue;
    row.clear();
    row += format_double(trace.times[s]);
    const auto append = [&row](double v) {
      row += ',';
      row += format_double(v);
    };
    for (Eigen::Index k = 0; k < n; ++k) append(x(2 * k));
    for (Eigen::Index k = 0; k < n; ++k) append(x(2 * k + 1));
    for (Eigen::Index k = 0; k < n; ++k) append(i(k));
    append(trace.voltage[s]);
    if (with_estimator) {
      const auto& est = *trace.estimator;
      const Vector& xh = est.estimates[s];
      for (Eigen::Index k = 0; k < n; ++k) append(xh(2 * k));
      for (Eigen::Index k = 0; k < n; ++k) append(xh(2 * k + 1));
      append(est.error_norm[s]);
      append(est.voltage_error[s]);
    }
    row += '\n';
    out << row;
  }
}

}  // namespace parapack
