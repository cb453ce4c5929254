#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bfm/cost.hpp"
#include "bfm/subsets.hpp"
#include "bfm/thresholds.hpp"
#include "bfm/valuation.hpp"

namespace bfm {

/// Two-player zero-sum item-bidding game: the bidder posts a vector d with
/// d(U) <= budget, the rival posts c with c(U) <= gamma * budget, and the
/// bidder's payoff is the value of the items where her bid is at least the
/// rival's. Strategies live on the cost grid.
struct GameInstance {
  const Valuation* valuation = nullptr;
  CostGrid grid;
  double gamma = 1.0;
  std::vector<std::vector<std::int64_t>> strategies;  // K, in grid units

  double budget() const { return grid.budget; }

  /// All grid vectors with per-coordinate step budget / 2^grid_bits and
  /// total at most the budget, in lexicographic order. Throws CapacityError
  /// when the strategy count would exceed max_strategies.
  static GameInstance uniform_grid(const Valuation& v, const CostGrid& grid, double gamma,
                                   int grid_bits, std::size_t max_strategies = 4096);

  void validate() const;
};

/// Number of grid vectors with the given per-coordinate resolution; the
/// size uniform_grid would produce.
std::size_t uniform_grid_size(int n, int grid_bits);

/// M[c][d] = v({e : c_e <= d_e}) / v(U), for strategies c, d in K.
struct PayoffMatrix {
  std::size_t k = 0;
  std::vector<double> entries;  // row-major, rows indexed by c
  double value_total = 0.0;     // v(U)
  /// min over pairs of v(win(c,d)) + v(win(d,c)) - v(U), computed on raw
  /// (undivided) values; nonnegative iff the symmetric dominance identity
  /// M + M^T >= J holds.
  double min_symmetric_slack = 0.0;

  double at(std::size_t c, std::size_t d) const { return entries[c * k + d]; }
  PayoffMatrix transposed() const;
};

struct MixedStrategy {
  std::vector<double> probs;  // over K, sums to one
};

struct GameSolution {
  MixedStrategy strategy;
  double value = 0.0;  // in units of v(U)
  std::uint64_t trace_hash = 0;
};

/// Bidder payoff v({e : c_e <= d_e}) with the bid vector snapped down to the
/// cost grid before the comparison.
double payoff(const Valuation& v, const CostGrid& grid, std::span<const double> winner_bids,
              std::span<const double> rival_bids);
double payoff_units(const Valuation& v, std::span<const std::int64_t> rival_units,
                    std::span<const std::int64_t> winner_units);

PayoffMatrix build_payoff_matrix(const GameInstance& game);

/// Optimal mixed strategy of the matrix game (row player receives M x and
/// the column player picks the minimizing row).
GameSolution solve_matrix_game(const PayoffMatrix& m);

/// Equilibrium strategy over the instance's strategy set K.
GameSolution existence_lp(const GameInstance& game);

struct WeightedBid {
  std::vector<double> bids;
  double prob = 0.0;
};

struct AdversaryOptions {
  Mask scope = 0;  // 0 = full ground set
  int max_elements = 10;
  std::size_t max_support = 16;
};

struct AdversaryResult {
  std::vector<std::int64_t> cost_units;
  double expected_payoff = 0.0;
  bool heuristic = false;
};

/// Exact minimizer of the expected payoff over grid cost vectors with total
/// at most adversary_budget, searching the restricted candidate set where
/// each coordinate is either zero or one grid step above a posted bid (the
/// payoff is a step function of each coordinate, so nothing in between can
/// help). Ties resolve to the lexicographically smallest vector.
AdversaryResult adversary_best_response(const Valuation& v, const CostGrid& grid,
                                        std::span<const WeightedBid> distribution,
                                        double adversary_budget, AdversaryOptions options = {});

AdversaryResult adversary_best_response(const Valuation& v, const ThresholdDistribution& dist,
                                        const CostGrid& grid, double adversary_budget,
                                        AdversaryOptions options = {});

/// Annealing search over the same candidate grid for inputs past the exact
/// search caps. The result is an upper bound on the true minimum and carries
/// heuristic = true.
AdversaryResult adversary_anneal(const Valuation& v, const CostGrid& grid,
                                 std::span<const WeightedBid> distribution,
                                 double adversary_budget, Mask scope = 0,
                                 std::uint64_t seed = 1, int steps = 20000);

/// Minimum expected payoff against an explicit candidate list.
double min_expected_payoff(const Valuation& v, const CostGrid& grid,
                           std::span<const WeightedBid> distribution,
                           std::span<const std::vector<std::int64_t>> candidates, Mask scope = 0);

/// Rival vector that limits a single posted bid vector to at most the best
/// singleton value: every positive bid is overcut by epsilon except the
/// lowest-index one, which absorbs the total overcut. Kept in exact
/// rational units of (grid step / scale) so the sum identity c(U) = d(U)
/// and nonnegativity are exact.
struct PureCounterexample {
  std::vector<double> costs;
  std::vector<std::int64_t> scaled_units;  // costs in units of step / scale
  std::int64_t scale = 1;
  int survivor = 0;  // the single element that still wins
};

PureCounterexample counterexample_pure(const Valuation& v, const CostGrid& grid,
                                       std::span<const std::int64_t> bid_units);

}  // namespace bfm
