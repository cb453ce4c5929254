#pragma once

#include <cstdint>
#include <vector>

namespace bfm::lp {

enum class Sense { LessEq, Eq };

struct Constraint {
  std::vector<double> coeffs;  // one per structural variable
  double rhs = 0.0;            // must be nonnegative
  Sense sense = Sense::LessEq;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Solution {
  Status status = Status::Optimal;
  double objective = 0.0;
  std::vector<double> x;      // structural variables
  std::vector<double> duals;  // one per constraint
  long iterations = 0;
  std::uint64_t trace_hash = 0;  // hash of the pivot sequence
};

struct Options {
  long max_iterations = 200000;
  double tol = 1e-9;
};

// Maximizes objective . x subject to the constraints and x >= 0, with a
// dense two-phase tableau simplex. Pivot selection is deterministic
// (largest reduced profit, ties to the lowest column index; minimum ratio,
// ties to the lowest basis variable) and falls back to Bland's rule after a
// long degenerate stall, so a fixed input always yields the same canonical
// optimal basis, pivot trace, and dual vector.
Solution maximize(const std::vector<double>& objective, const std::vector<Constraint>& rows,
                  const Options& options = {});

}  // namespace bfm::lp
