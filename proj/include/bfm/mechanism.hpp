#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bfm/bidding_game.hpp"
#include "bfm/cost.hpp"
#include "bfm/marginal_lp.hpp"
#include "bfm/rng.hpp"
#include "bfm/subsets.hpp"
#include "bfm/thresholds.hpp"
#include "bfm/valuation.hpp"

namespace bfm {

/// One procurement problem: a valuation over sellers, their true costs on
/// the dyadic grid, and the buyer's budget. `epsilon` is the approximation
/// slack of the first-stage value estimate (the default estimator is exact,
/// which is a valid (2+epsilon)-approximation for every epsilon >= 0).
struct Instance {
  Valuation valuation;
  CostGrid grid;
  std::vector<std::int64_t> true_cost_units;
  double epsilon = 0.0;

  int n() const { return valuation.n(); }
  double budget() const { return grid.budget; }
  CostVector true_costs() const { return CostVector{grid, true_cost_units}; }
  CostVector costs(std::vector<std::int64_t> units) const {
    return CostVector{grid, std::move(units)};
  }
  void validate() const;
};

enum class Branch { R, RPrime, Singleton, Fallback };
const char* branch_name(Branch b);

struct MechanismTrace {
  Mask active = 0;
  Mask u1 = 0;
  Mask u2 = 0;
  double v1 = 0.0;
  Mask s_star = 0;
  double kappa = 0.0;
  int support_index = -1;
  std::vector<double> sampled_bids;               // d, full length
  Mask r_set = 0;
  std::vector<double> q;                          // full length, zero off s_star
  std::vector<std::int64_t> a_threshold_units;    // per element, 0 off s_star
  Mask a_set = 0;
  Mask r_prime = 0;
  int e_star = -1;

  bool same_allocation(const MechanismTrace& other) const;
};

struct MechanismOutcome {
  Branch branch = Branch::R;
  Mask winners = 0;
  std::vector<std::int64_t> payment_units;
  double value = 0.0;
  MechanismTrace trace;

  std::int64_t total_payment_units() const;
};

/// Per-instance caches shared across tapes and replays: the LP memo, the
/// value-estimate cache, per-demand-set threshold distributions and
/// second-stage LP solutions, and the small-instance fallback strategy.
/// Safe for concurrent use.
class MechanismContext {
 public:
  explicit MechanismContext(const Instance& instance);

  const Instance& instance() const { return *instance_; }
  const MarginalLpSolver& lp() const { return lp_; }

  double v1_for(Mask u1, const std::vector<std::int64_t>& reported_units);
  struct DistributionEntry {
    KappaSearchResult kappa;
    ThresholdDistribution distribution;
  };
  const DistributionEntry& distribution_for(Mask s_star);
  const std::vector<double>& q_for(Mask s_star);
  struct FallbackStrategy {
    GameInstance game;
    GameSolution solution;
    int grid_bits = 0;
  };
  const FallbackStrategy& fallback();

 private:
  const Instance* instance_;
  MarginalLpSolver lp_;
  std::mutex mutex_;
  std::map<std::pair<Mask, std::vector<std::int64_t>>, double> v1_cache_;
  std::map<Mask, std::shared_ptr<const DistributionEntry>> dist_cache_;
  std::map<Mask, std::shared_ptr<const std::vector<double>>> q_cache_;
  std::shared_ptr<const FallbackStrategy> fallback_;
};

/// Splits the active elements into two groups with independent fair coins
/// from the tape's per-element partition stream.
std::pair<Mask, Mask> partition(Mask active, const RandomTape& tape);

/// First-stage value estimate: the exact budget-constrained optimum over
/// `group`, which satisfies the (2+epsilon) guarantee for any epsilon >= 0.
/// A different estimator can be supplied via MechanismOptions.
double estimate_v1(const Valuation& v, Mask group, const CostVector& reported, double budget,
                   double epsilon);

/// Demand set over `group` at prices v1 * c_e / (2B), canonical tie-break.
Mask select_demand_set(const Valuation& v, Mask group, const CostVector& reported, double v1);

/// Canonical optimal q >= 0 maximizing q(base) subject to
/// q(S) <= v(base) - v(base minus S) for every S within base. Returns a
/// full-length vector, zero off base.
std::vector<double> solve_xos_lp(const Valuation& v, Mask base);

using V1Estimator = double (*)(const Valuation&, Mask, const CostVector&, double, double);

struct MechanismOptions {
  V1Estimator v1_estimator = nullptr;  // nullptr = exact default
};

/// Runs the full mechanism on reported costs under the given random tape
/// and returns winners, threshold payments, and the complete trace.
MechanismOutcome run_mechanism(const Instance& instance,
                               const std::vector<std::int64_t>& reported_units,
                               const RandomTape& tape, MechanismContext* ctx = nullptr,
                               const MechanismOptions& options = {});

/// Recomputes the threshold payments for an outcome produced by
/// run_mechanism on the same tape; throws IntegrityError if the outcome
/// does not match the replay.
std::vector<std::int64_t> threshold_payments(const Instance& instance,
                                             const std::vector<std::int64_t>& reported_units,
                                             const RandomTape& tape,
                                             const MechanismOutcome& outcome,
                                             MechanismContext* ctx = nullptr,
                                             const MechanismOptions& options = {});

double branch_alpha(double epsilon);

std::string outcome_to_json(const MechanismOutcome& outcome);

}  // namespace bfm
