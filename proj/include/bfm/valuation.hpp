#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bfm/cost.hpp"
#include "bfm/subsets.hpp"

namespace bfm {

/// Monotone normalized set-function valuations over a ground set of n
/// elements. Instances are immutable after construction and safe to query
/// concurrently. For n <= 14 the full value table is precomputed so that
/// subset enumeration (demand queries, knapsacks, LP columns) runs on
/// table lookups.
class Valuation {
 public:
  enum class Kind { Additive, Xos, Coverage, Table, BudgetAdditive };

  /// Empty placeholder (n = 0); every factory returns a usable valuation.
  Valuation() = default;

  static Valuation additive(std::vector<double> weights);
  /// Max over additive clauses; at least one clause, each of length n.
  static Valuation xos(int n, std::vector<std::vector<double>> clauses);
  /// v(S) = total weight of points covered by the elements of S.
  static Valuation coverage(int n, std::vector<double> point_weights,
                            std::vector<std::vector<int>> covers);
  /// Explicit table of 2^n values in mask order. Structure (normalization,
  /// monotonicity, subadditivity) is NOT enforced here so that
  /// check_structure can report on arbitrary tables; entry points that admit
  /// instances into the system are responsible for rejecting bad tables.
  static Valuation table(int n, std::vector<double> values);
  /// v(S) = min(cap, sum of weights).
  static Valuation budget_additive(std::vector<double> weights, double cap);

  int n() const { return n_; }
  Kind kind() const { return kind_; }

  double value(Mask s) const;

  bool has_table() const { return !table_.empty(); }
  const std::vector<double>& raw_table() const { return table_; }

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<std::vector<double>>& clauses() const { return clauses_; }
  double cap() const { return cap_; }
  const std::vector<double>& point_weights() const { return point_weights_; }
  std::vector<std::vector<int>> covers() const;

  std::string kind_name() const;

 private:
  void build_table();
  double value_uncached(Mask s) const;

  Kind kind_ = Kind::Additive;
  int n_ = 0;
  std::vector<double> weights_;                 // additive / budget-additive
  double cap_ = 0.0;                            // budget-additive
  std::vector<std::vector<double>> clauses_;    // xos
  std::vector<double> point_weights_;           // coverage
  std::vector<std::uint64_t> cover_bits_;       // coverage, bitset per element
  std::vector<double> table_;                   // explicit or precomputed
};

/// v(S). Throws MalformedInputError if S is not a subset of the ground set.
double eval(const Valuation& v, Mask s);

/// Canonical utility-maximizing subset of `restricted` at the given prices:
/// argmax of v(T) - p(T), ties resolved to the numerically smallest mask.
/// Elements outside `restricted` are excluded outright (the "infinite
/// price" sentinel). Prices are read only on `restricted`.
Mask demand_set(const Valuation& v, std::span<const double> prices, Mask restricted);

/// argmax of v({e}), ties to the smallest index. Ground set must be nonempty.
int best_singleton(const Valuation& v);

struct KnapsackResult {
  double value = 0.0;
  Mask witness = 0;
};

inline constexpr int kDefaultBruteForceCap = 20;

/// Exact max of v(S) over S within `restricted` with c(S) <= budget, by
/// subset enumeration. Throws CapacityError when |restricted| exceeds cap.
KnapsackResult opt_knapsack(const Valuation& v, const CostVector& costs, double budget,
                            Mask restricted, int cap = kDefaultBruteForceCap);

struct StructureReport {
  bool normalized = false;
  bool monotone = false;
  bool subadditive = false;
  bool all_ok() const { return normalized && monotone && subadditive; }
};

/// Exhaustive structure verification over all subset pairs (O(4^n) worst
/// case); intended for desk-scale n.
StructureReport check_structure(const Valuation& v);

}  // namespace bfm
