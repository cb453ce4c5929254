#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "bfm/cost.hpp"
#include "bfm/marginal_lp.hpp"
#include "bfm/subsets.hpp"

namespace bfm {

/// Posted-payment bids on a base set (zero elsewhere) with total at most the
/// budget. Vectors produced by build_threshold_vector sum to the budget
/// exactly (up to float dirt of 1e-9 * budget).
struct ThresholdVector {
  Mask base = 0;
  double budget = 0.0;
  std::vector<double> bids;  // full-length, zero off base

  double total() const;
};

/// Explicit mixed strategy over threshold vectors; probabilities sum to one,
/// with residual mass carried by an explicit all-zero vector.
struct ThresholdDistribution {
  Mask base = 0;
  double kappa = 0.0;
  double budget = 0.0;
  std::vector<std::pair<ThresholdVector, double>> support;

  /// CDF draw: maps a uniform [0,1) sample to a support index.
  std::size_t sample_index(double uniform) const;
};

/// Bids proportional to the canonical optimal dual prices of the
/// bounded-marginal LP at (base, kappa), scaled so they sum to the budget.
/// Degenerate all-zero dual prices fall back to uniform budget/|base| bids
/// (the LP value then already reaches v(base) and the payoff guarantee is
/// vacuous).
ThresholdVector build_threshold_vector(const MarginalLpSolver& solver, Mask base, double kappa,
                                       double budget);

/// The mixed strategy obtained by drawing a set from the canonical optimal
/// bounded-marginal distribution at the ladder-optimal kappa and posting
/// that set's threshold vector. Requires ground_n >= 8 and a nonempty base.
ThresholdDistribution build_distribution(const MarginalLpSolver& solver, Mask base, double budget,
                                         int ground_n);

/// Elements of the vector's base whose cost clears the posted bid; the bid
/// is snapped down to the cost grid so the comparison is exact.
Mask winning_set(const ThresholdVector& d, const CostVector& costs);

/// Whether the pure-strategy payoff bound
///   v(winning set) >= v(base) - opt_value(kappa, base) - tol
/// holds for this (d, c). Requires c(base) <= kappa * budget.
bool pure_payoff_guarantee(const MarginalLpSolver& solver, Mask base, double kappa, double budget,
                           const ThresholdVector& d, const CostVector& costs, double tol = 1e-6);

/// One line per support vector: `prob; d_0,...,d_{n-1}` in grid units.
void dump_distribution(const ThresholdDistribution& dist, const CostGrid& grid, std::ostream& out);

}  // namespace bfm
