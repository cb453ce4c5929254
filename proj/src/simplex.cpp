#include "bfm/simplex.hpp"

#include <cmath>
#include <cstddef>
#include <limits>

#include "bfm/errors.hpp"

namespace bfm::lp {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline void fnv_mix(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
}

}  // namespace

Solution maximize(const std::vector<double>& objective, const std::vector<Constraint>& rows,
                  const Options& options) {
  const std::size_t n = objective.size();
  const std::size_t m = rows.size();
  for (const auto& row : rows) {
    if (row.coeffs.size() != n) throw MalformedInputError("simplex: row length mismatch");
    if (row.rhs < 0.0) throw MalformedInputError("simplex: rhs must be nonnegative");
  }

  std::size_t num_slack = 0, num_artificial = 0;
  for (const auto& row : rows) (row.sense == Sense::LessEq ? num_slack : num_artificial)++;

  const std::size_t total = n + num_slack + num_artificial;
  const std::size_t width = total + 1;  // + rhs column
  const bool needs_phase1 = num_artificial > 0;

  // Tableau: m constraint rows, then the phase-2 objective row and (when
  // needed) the phase-1 objective row. Objective rows hold reduced profits.
  std::vector<double> tab((m + 2) * width, 0.0);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return tab[r * width + c]; };
  const std::size_t obj2 = m;      // phase-2 row
  const std::size_t obj1 = m + 1;  // phase-1 row

  std::vector<std::size_t> basis(m);
  std::vector<std::size_t> companion(m);  // slack/artificial column per row
  std::vector<bool> banned(total, false);

  std::size_t next_slack = n, next_art = n + num_slack;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) at(i, j) = rows[i].coeffs[j];
    at(i, total) = rows[i].rhs;
    if (rows[i].sense == Sense::LessEq) {
      at(i, next_slack) = 1.0;
      basis[i] = next_slack;
      companion[i] = next_slack;
      ++next_slack;
    } else {
      at(i, next_art) = 1.0;
      basis[i] = next_art;
      companion[i] = next_art;
      ++next_art;
    }
  }

  // Phase-2 objective row: reduced profits start at the raw objective
  // (initial basis has zero objective coefficients except artificials,
  // which are priced into phase 1 only).
  for (std::size_t j = 0; j < n; ++j) at(obj2, j) = objective[j];

  if (needs_phase1) {
    // Phase-1 profits: maximize -sum(artificials); price out the initial
    // artificial basis so the row starts consistent.
    for (std::size_t j = n + num_slack; j < total; ++j) at(obj1, j) = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] >= n + num_slack) {
        for (std::size_t j = 0; j <= total; ++j) at(obj1, j) += at(i, j);
      }
    }
  }

  Solution sol;
  std::uint64_t trace = kFnvOffset;
  long iterations = 0;
  const double tol = options.tol;

  auto pivot = [&](std::size_t row, std::size_t col) {
    const double piv = at(row, col);
    const double inv = 1.0 / piv;
    for (std::size_t j = 0; j <= total; ++j) at(row, j) *= inv;
    at(row, col) = 1.0;
    for (std::size_t r = 0; r < m + 2; ++r) {
      if (r == row) continue;
      const double factor = at(r, col);
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j <= total; ++j) at(r, j) -= factor * at(row, j);
      at(r, col) = 0.0;
    }
    basis[row] = col;
    fnv_mix(trace, (static_cast<std::uint64_t>(col) << 20) | row);
  };

  auto run_phase = [&](std::size_t obj_row, bool phase1) -> Status {
    long stall = 0;
    double last_objective = -std::numeric_limits<double>::infinity();
    const long bland_after = 64 + 4 * static_cast<long>(m + total);
    while (true) {
      if (iterations >= options.max_iterations) return Status::IterationLimit;
      const bool bland = stall > bland_after;

      // Entering column.
      std::size_t enter = total;
      double best_profit = tol;
      for (std::size_t j = 0; j < total; ++j) {
        if (banned[j]) continue;
        const double profit = at(obj_row, j);
        if (bland) {
          if (profit > tol) {
            enter = j;
            break;
          }
        } else if (profit > best_profit) {
          best_profit = profit;
          enter = j;
        }
      }
      if (enter == total) return Status::Optimal;

      // Leaving row: minimum ratio, ties to the smallest basis variable.
      std::size_t leave = m;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) {
        const double a = at(i, enter);
        if (a <= tol) continue;
        const double ratio = at(i, total) / a;
        if (ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 && (leave == m || basis[i] < basis[leave]))) {
          best_ratio = ratio;
          leave = i;
        }
      }
      if (leave == m) return phase1 ? Status::Infeasible : Status::Unbounded;

      pivot(leave, enter);
      ++iterations;

      const double cur = -at(obj_row, total);
      if (cur > last_objective + 1e-12) {
        last_objective = cur;
        stall = 0;
      } else {
        ++stall;
      }
    }
  };

  if (needs_phase1) {
    const Status st = run_phase(obj1, true);
    if (st == Status::IterationLimit) {
      sol.status = st;
      sol.iterations = iterations;
      sol.trace_hash = trace;
      return sol;
    }
    // Feasible iff all artificials can be driven to zero.
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] >= n + num_slack) infeas += at(i, total);
    }
    if (st == Status::Infeasible || infeas > 1e-7) {
      sol.status = Status::Infeasible;
      sol.iterations = iterations;
      sol.trace_hash = trace;
      return sol;
    }
    // Drive residual artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] < n + num_slack) continue;
      for (std::size_t j = 0; j < n + num_slack; ++j) {
        if (std::abs(at(i, j)) > 1e-7) {
          pivot(i, j);
          ++iterations;
          break;
        }
      }
    }
    for (std::size_t j = n + num_slack; j < total; ++j) banned[j] = true;
  }

  const Status st = run_phase(obj2, false);
  sol.status = st;
  sol.iterations = iterations;
  sol.trace_hash = trace;

  sol.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) sol.x[basis[i]] = at(i, total);
  }
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += objective[j] * sol.x[j];

  // Dual of row i sits in the objective row under the row's companion
  // column (reduced profit of a slack/artificial with zero cost is -y_i).
  sol.duals.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) sol.duals[i] = -at(obj2, companion[i]);

  return sol;
}

}  // namespace bfm::lp
