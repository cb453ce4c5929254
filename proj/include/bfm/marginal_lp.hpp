#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "bfm/subsets.hpp"
#include "bfm/valuation.hpp"

namespace bfm {

/// A distribution over subsets of `base` in which every element appears
/// with probability at most `kappa`. Residual mass (1 - sum of support
/// probabilities) sits on the empty set.
struct MarginalDistribution {
  Mask base = 0;
  double kappa = 0.0;
  std::vector<std::pair<Mask, double>> support;  // sorted by mask

  double mass() const;
  double marginal(int element) const;
  double expected_value(const Valuation& v) const;
};

/// Optimal dual of the bounded-marginal LP: per-element prices on `base`
/// and a scalar mu with v(T) <= p(T) + mu for every T within base.
struct DualCertificate {
  Mask base = 0;
  std::vector<double> prices;  // full-length, zero off base
  double mu = 0.0;

  double price_total() const;
  double objective(double kappa) const { return kappa * price_total() + mu; }
};

struct MarginalSolve {
  MarginalDistribution primal;
  DualCertificate dual;
  double value = 0.0;
  long iterations = 0;
  bool used_column_generation = false;
  std::uint64_t trace_hash = 0;
};

enum class LpMode { Auto, Enumerate, ColumnGeneration };

struct MarginalLpOptions {
  LpMode mode = LpMode::Auto;
  int enumerate_limit = 12;       // subset enumeration up to this base size
  long iteration_cap_base = 10;   // cap = base * 2^min(|S|, 12)
  double tol = 1e-9;
};

/// Number of ladder levels for a ground set of size n: ceil(log2 log2 n).
int kappa_levels(int ground_n);

/// The ladder Z = { 2^-2^i : 1 <= i <= kappa_levels(n) }.
std::vector<double> kappa_ladder(int ground_n);

struct KappaSearchResult {
  struct Entry {
    double z = 0.0;
    double value_at_z = 0.0;
    double value_at_z_squared = 0.0;
    double gap() const { return value_at_z - value_at_z_squared; }
  };
  double kappa = 0.0;
  double gap = 0.0;
  std::vector<Entry> table;
  int levels = 0;
};

/// Deterministic solver for the bounded-marginal LP over subsets of a fixed
/// valuation's ground set. Solves are memoized per (base, kappa); the memo
/// is safe for concurrent insert-or-read.
class MarginalLpSolver {
 public:
  explicit MarginalLpSolver(const Valuation& v, MarginalLpOptions options = {});

  const Valuation& valuation() const { return *valuation_; }
  const MarginalLpOptions& options() const { return options_; }

  /// Canonical optimal primal/dual pair for max E[v(T)] over distributions
  /// on subsets of `base` with marginals at most kappa, kappa in (0, 1].
  const MarginalSolve& solve(Mask base, double kappa) const;

  /// Value-only accessor; additionally admits kappa == 0 (value 0).
  double opt_value(Mask base, double kappa) const;

  /// Best ladder value: argmax over z in Z of opt_value(z) - opt_value(z^2).
  /// Requires ground_n >= 8.
  KappaSearchResult find_kappa(Mask base, int ground_n) const;

 private:
  MarginalSolve solve_uncached(Mask base, double kappa) const;
  MarginalSolve solve_enumerate(Mask base, double kappa) const;
  MarginalSolve solve_column_generation(Mask base, double kappa) const;

  const Valuation* valuation_;
  MarginalLpOptions options_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<Mask, std::uint64_t>, std::shared_ptr<const MarginalSolve>> memo_;
};

/// One-shot wrappers around MarginalLpSolver.
MarginalSolve solve_bounded_marginal_lp(const Valuation& v, Mask base, double kappa,
                                        MarginalLpOptions options = {});
double opt_lp_value(const Valuation& v, Mask base, double kappa, MarginalLpOptions options = {});
KappaSearchResult find_kappa(const Valuation& v, Mask base, int ground_n,
                             MarginalLpOptions options = {});

/// One text line per primal column and dual row, for audit.
void dump_lp_debug(const MarginalSolve& solve, std::ostream& out);

}  // namespace bfm
