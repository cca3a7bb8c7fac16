#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "parapack/simulator.hpp"

namespace parapack {

/// Shortest decimal that parses back to exactly the same double.
std::string format_double(double value);

/// Column names of the trace CSV for n cells.
std::vector<std::string> trace_header(std::size_t cells, bool with_estimator);

/// Writes the trace as CSV:
///   t, z_1..z_n, w_1..w_n, i_1..i_n, v[, zhat_1..zhat_n, what_1..what_n, e_norm, v_err]
/// Every row is re-checked: the branch currents must sum to the applied current
/// within 1e-8, otherwise Error is thrown. With stride > 1 only every
/// stride-th step (and always the last one) is written; all rows are checked.
void write_trace_csv(std::ostream& out, const SimulationTrace& trace, std::size_t stride = 1);

}  // namespace parapack
