#pragma once

#include <cstddef>
#include <vector>

namespace geosic::lp {

/// Row-major dense constraint system A x <= b.
struct PackingProblem {
  std::size_t num_vars = 0;
  std::vector<double> objective;           // c, length num_vars
  std::vector<std::vector<double>> rows;   // A
  std::vector<double> rhs;                 // b, all >= 0
};

struct Solution {
  std::vector<double> x;
  double value = 0.0;
  std::size_t pivots = 0;
};

/// Maximizes c^T x subject to A x <= b, x >= 0 with b >= 0, so the slack basis
/// is feasible and a single phase suffices. Dense tableau with Bland's rule;
/// optimality is declared when every reduced cost is below `tolerance`.
Solution maximize_packing(const PackingProblem& problem,
                          double tolerance = 1e-9);

}  // namespace geosic::lp
