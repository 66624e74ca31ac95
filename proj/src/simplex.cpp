#include "geosic/simplex.hpp"

#include <cmath>
#include <limits>

#include "geosic/error.hpp"

namespace geosic::lp {

Solution maximize_packing(const PackingProblem& problem, double tolerance) {
  const std::size_t n = problem.num_vars;
  const std::size_t m = problem.rows.size();
  require(problem.objective.size() == n, "simplex: objective size mismatch");
  require(problem.rhs.size() == m, "simplex: rhs size mismatch");

  // Tableau columns: n structural, m slack, 1 rhs. Last row holds -c.
  const std::size_t width = n + m + 1;
  std::vector<double> t((m + 1) * width, 0.0);
  auto at = [&](std::size_t r, std::size_t c) -> double& {
    return t[r * width + c];
  };
  std::vector<std::size_t> basis(m);
  for (std::size_t r = 0; r < m; ++r) {
    require(problem.rows[r].size() == n, "simplex: row size mismatch");
    require(problem.rhs[r] >= 0.0, "simplex: rhs must be >= 0");
    for (std::size_t c = 0; c < n; ++c) at(r, c) = problem.rows[r][c];
    at(r, n + r) = 1.0;
    at(r, width - 1) = problem.rhs[r];
    basis[r] = n + r;
  }
  for (std::size_t c = 0; c < n; ++c) at(m, c) = -problem.objective[c];

  Solution sol;
  const std::size_t max_pivots = 50 * (n + m) + 1000;
  for (;;) {
    // Bland: lowest-index improving column.
    std::size_t enter = width;
    for (std::size_t c = 0; c + 1 < width; ++c) {
      if (at(m, c) < -tolerance) {
        enter = c;
        break;
      }
    }
    if (enter == width) break;

    // Ratio test, ties broken by lowest basic index.
    std::size_t leave = m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < m; ++r) {
      const double a = at(r, enter);
      if (a > 1e-12) {
        const double ratio = at(r, width - 1) / a;
        if (ratio < best - 1e-15 ||
            (ratio <= best + 1e-15 && leave < m && basis[r] < basis[leave])) {
          best = ratio;
          leave = r;
        }
      }
    }
    if (leave == m) fail(ErrorKind::internal, "simplex: unbounded packing LP");

    const double pivot = at(leave, enter);
    for (std::size_t c = 0; c < width; ++c) at(leave, c) /= pivot;
    for (std::size_t r = 0; r <= m; ++r) {
      if (r == leave) continue;
      const double f = at(r, enter);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < width; ++c) at(r, c) -= f * at(leave, c);
    }
    basis[leave] = enter;
    if (++sol.pivots > max_pivots) {
      fail(ErrorKind::internal, "simplex: pivot limit reached");
    }
  }

  sol.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (basis[r] < n) sol.x[basis[r]] = std::max(0.0, at(r, width - 1));
  }
  sol.value = 0.0;
  for (std::size_t c = 0; c < n; ++c) sol.value += problem.objective[c] * sol.x[c];
  return sol;
}

}  // namespace geosic::lp
