#pragma once

#include <stdexcept>
#include <string>

namespace bfm {

// Inputs that violate a documented precondition (bad index, bad mask, ...).
struct MalformedInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A brute-force routine was asked to enumerate past its configured cap.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Degenerate input for which the requested object does not exist.
struct DegenerateInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Replay of a recorded outcome diverged from the recomputation.
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// LP solve aborted before reaching optimality; carries the best bounds
// proven so far (lower = best feasible objective, upper = best dual bound).
struct SolverError : std::runtime_error {
  double best_lower;
  double best_upper;
  SolverError(const std::string& what, double lower, double upper)
      : std::runtime_error(what), best_lower(lower), best_upper(upper) {}
};

}  // namespace bfm
