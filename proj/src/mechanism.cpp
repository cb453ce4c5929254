#include "bfm/mechanism.hpp"

#include <algorithm>
#include <cmath>

#include "bfm/errors.hpp"
#include "bfm/simplex.hpp"
#include "json.hpp"

namespace bfm {

namespace {
constexpr int kMainPathMinimum = 8;
}

void Instance::validate() const {
  if (static_cast<int>(true_cost_units.size()) != valuation.n())
    throw MalformedInputError("cost vector length mismatch");
  if (!(grid.budget > 0.0)) throw MalformedInputError("budget must be positive");
  if (grid.bits < 0 || grid.bits > 24) throw MalformedInputError("grid bits out of range");
  if (epsilon < 0.0) throw MalformedInputError("epsilon must be nonnegative");
  for (std::int64_t u : true_cost_units) {
    if (u < 0) throw MalformedInputError("costs must be nonnegative");
  }
}

const char* branch_name(Branch b) {
  switch (b) {
    case Branch::R: return "R";
    case Branch::RPrime: return "R_prime";
    case Branch::Singleton: return "e_star";
    case Branch::Fallback: return "fallback";
  }
  return "?";
}

bool MechanismTrace::same_allocation(const MechanismTrace& other) const {
  return active == other.active && u1 == other.u1 && u2 == other.u2 && v1 == other.v1 &&
         s_star == other.s_star && kappa == other.kappa && support_index == other.support_index &&
         sampled_bids == other.sampled_bids && r_set == other.r_set && q == other.q &&
         a_set == other.a_set && r_prime == other.r_prime && e_star == other.e_star;
}

std::int64_t MechanismOutcome::total_payment_units() const {
  std::int64_t sum = 0;
  for (std::int64_t p : payment_units) sum += p;
  return sum;
}

double branch_alpha(double epsilon) { return 1.0 / (4.0 * (2.0 + epsilon) + 1.0); }

MechanismContext::MechanismContext(const Instance& instance)
    : instance_(&instance), lp_(instance.valuation) {
  instance.validate();
}

double MechanismContext::v1_for(Mask u1, const std::vector<std::int64_t>& reported_units) {
  std::vector<std::int64_t> key_units(subset_size(u1));
  std::size_t i = 0;
  for (int e : mask_elements(u1)) key_units[i++] = reported_units[e];
  const std::pair<Mask, std::vector<std::int64_t>> key{u1, std::move(key_units)};
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = v1_cache_.find(key);
    if (it != v1_cache_.end()) return it->second;
  }
  const double v1 = estimate_v1(instance_->valuation, u1, instance_->costs(reported_units),
                                instance_->budget(), instance_->epsilon);
  std::lock_guard<std::mutex> lock(mutex_);
  return v1_cache_.emplace(key, v1).first->second;
}

const MechanismContext::DistributionEntry& MechanismContext::distribution_for(Mask s_star) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = dist_cache_.find(s_star);
    if (it != dist_cache_.end()) return *it->second;
  }
  auto entry = std::make_shared<DistributionEntry>();
  entry->kappa = lp_.find_kappa(s_star, instance_->n());
  entry->distribution = build_distribution(lp_, s_star, instance_->budget(), instance_->n());
  std::lock_guard<std::mutex> lock(mutex_);
  return *dist_cache_.emplace(s_star, std::move(entry)).first->second;
}

const std::vector<double>& MechanismContext::q_for(Mask s_star) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = q_cache_.find(s_star);
    if (it != q_cache_.end()) return *it->second;
  }
  auto q = std::make_shared<const std::vector<double>>(solve_xos_lp(instance_->valuation, s_star));
  std::lock_guard<std::mutex> lock(mutex_);
  return *q_cache_.emplace(s_star, std::move(q)).first->second;
}

const MechanismContext::FallbackStrategy& MechanismContext::fallback() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (fallback_) return *fallback_;
  }
  auto fb = std::make_shared<FallbackStrategy>();
  int bits = std::min(instance_->grid.bits, 10);
  while (bits > 0 && uniform_grid_size(instance_->n(), bits) > 4096) --bits;
  fb->grid_bits = bits;
  fb->game = GameInstance::uniform_grid(instance_->valuation, instance_->grid, 1.0, bits);
  fb->solution = existence_lp(fb->game);
  std::lock_guard<std::mutex> lock(mutex_);
  if (!fallback_) fallback_ = std::move(fb);
  return *fallback_;
}

std::pair<Mask, Mask> partition(Mask active, const RandomTape& tape) {
  Mask u1 = 0;
  for (int e : mask_elements(active)) {
    if (tape.in_group_one(e)) u1 |= Mask{1} << e;
  }
  return {u1, active & ~u1};
}

double estimate_v1(const Valuation& v, Mask group, const CostVector& reported, double budget,
                   double /*epsilon*/) {
  if (group == 0) return 0.0;
  return opt_knapsack(v, reported, budget, group).value;
}

Mask select_demand_set(const Valuation& v, Mask group, const CostVector& reported, double v1) {
  if (v1 < 0.0) throw MalformedInputError("v1 must be nonnegative");
  std::vector<double> prices(v.n(), 0.0);
  const double denom = 2.0 * static_cast<double>(reported.grid.budget_units());
  for (int e : mask_elements(group)) {
    prices[e] = v1 * static_cast<double>(reported.units[e]) / denom;
  }
  return demand_set(v, prices, group);
}

std::vector<double> solve_xos_lp(const Valuation& v, Mask base) {
  if (base == 0) throw MalformedInputError("second-stage LP needs a nonempty base");
  const auto elements = mask_elements(base);
  const int size = static_cast<int>(elements.size());
  const double base_value = v.value(base);

  std::vector<int> position(v.n(), -1);
  for (int i = 0; i < size; ++i) position[elements[i]] = i;

  // Cutting planes over rows q(S) <= v(base) - v(base \ S); start with the
  // full set and all singletons, separate with a canonical demand query.
  std::vector<Mask> row_masks;
  std::vector<lp::Constraint> rows;
  auto add_row = [&](Mask s) {
    for (Mask existing : row_masks) {
      if (existing == s) return false;
    }
    lp::Constraint row;
    row.coeffs.assign(size, 0.0);
    for (int e : mask_elements(s)) row.coeffs[position[e]] = 1.0;
    row.rhs = std::max(0.0, base_value - v.value(base & ~s));
    rows.push_back(std::move(row));
    row_masks.push_back(s);
    return true;
  };
  add_row(base);
  for (int e : elements) add_row(Mask{1} << e);

  const std::vector<double> objective(size, 1.0);
  const long cap = 4096;
  std::vector<double> q(size, 0.0);
  for (long round = 0;; ++round) {
    if (round > cap) throw SolverError("second-stage LP exceeded its cutting-plane cap", 0.0, base_value);
    const lp::Solution sol = lp::maximize(objective, rows);
    if (sol.status != lp::Status::Optimal)
      throw SolverError("second-stage LP did not converge", 0.0, base_value);
    q = sol.x;

    std::vector<double> prices(v.n(), 0.0);
    double q_total = 0.0;
    for (int i = 0; i < size; ++i) {
      prices[elements[i]] = std::max(0.0, q[i]);
      q_total += q[i];
    }
    const Mask priced = demand_set(v, prices, base);
    double priced_utility = v.value(priced);
    for (int e : mask_elements(priced)) priced_utility -= prices[e];
    const double slack = priced_utility - (base_value - q_total);
    if (slack <= 1e-10 * std::max(1.0, base_value)) break;
    if (!add_row(base & ~priced)) break;  // numerically stuck on an existing row
  }

  std::vector<double> out(v.n(), 0.0);
  for (int i = 0; i < size; ++i) out[elements[i]] = std::max(0.0, q[i]);
  return out;
}

namespace {

struct Allocation {
  Branch branch = Branch::R;
  Mask winners = 0;
  MechanismTrace trace;
};

int best_active_singleton(const Valuation& v, Mask active) {
  int best = -1;
  double best_value = -1.0;
  for (int e : mask_elements(active)) {
    const double val = v.value(Mask{1} << e);
    if (val > best_value) {
      best_value = val;
      best = e;
    }
  }
  return best;
}

std::int64_t a_threshold_units(const CostGrid& grid, double q_e, double v1) {
  if (v1 <= 0.0) return 0;  // division guard: only zero-cost elements qualify
  return grid.snap_down_units(q_e * 4.0 * static_cast<double>(grid.budget_units()) / v1 *
                              grid.step());
}

Allocation run_allocation(const Instance& instance, const std::vector<std::int64_t>& reported,
                          const RandomTape& tape, MechanismContext& ctx,
                          const MechanismOptions& options) {
  const Valuation& v = instance.valuation;
  const int n = instance.n();
  if (static_cast<int>(reported.size()) != n)
    throw MalformedInputError("reported cost vector length mismatch");
  for (std::int64_t u : reported) {
    if (u < 0) throw MalformedInputError("reported costs must be nonnegative");
  }

  Allocation out;
  MechanismTrace& trace = out.trace;

  Mask active = 0;
  for (int e = 0; e < n; ++e) {
    if (reported[e] <= instance.grid.budget_units()) active |= Mask{1} << e;
  }
  trace.active = active;
  trace.sampled_bids.assign(n, 0.0);
  trace.q.assign(n, 0.0);
  trace.a_threshold_units.assign(n, 0);
  trace.e_star = best_active_singleton(v, active);

  if (n < kMainPathMinimum) {
    const auto& fb = ctx.fallback();
    const double u = tape.support_uniform();
    double cum = 0.0;
    std::size_t idx = fb.game.strategies.size() - 1;
    for (std::size_t i = 0; i < fb.solution.strategy.probs.size(); ++i) {
      cum += fb.solution.strategy.probs[i];
      if (u < cum) {
        idx = i;
        break;
      }
    }
    trace.support_index = static_cast<int>(idx);
    const auto& bid_units = fb.game.strategies[idx];
    Mask winners = 0;
    for (int e : mask_elements(active)) {
      if (reported[e] <= bid_units[e]) winners |= Mask{1} << e;
      trace.sampled_bids[e] = instance.grid.amount(bid_units[e]);
    }
    out.branch = Branch::Fallback;
    out.winners = winners;
    trace.r_set = winners;
    return out;
  }

  const auto [u1, u2] = partition(active, tape);
  trace.u1 = u1;
  trace.u2 = u2;

  const CostVector reported_costs = instance.costs(reported);
  const double v1 =
      options.v1_estimator != nullptr
          ? options.v1_estimator(v, u1, reported_costs, instance.budget(), instance.epsilon)
          : ctx.v1_for(u1, reported);
  trace.v1 = v1;

  const Mask s_star = select_demand_set(v, u2, reported_costs, v1);
  trace.s_star = s_star;

  Mask r_set = 0;
  Mask a_set = 0;
  Mask r_prime = 0;
  if (s_star != 0) {
    const auto& entry = ctx.distribution_for(s_star);
    trace.kappa = entry.kappa.kappa;
    const std::size_t idx = entry.distribution.sample_index(tape.support_uniform());
    trace.support_index = static_cast<int>(idx);
    const ThresholdVector& d = entry.distribution.support[idx].first;
    trace.sampled_bids = d.bids;
    // The sampled vector is zero off its own support set; zero-cost elements
    // of the demand set clear a zero bid, so the scan runs over all of it.
    for (int e : mask_elements(s_star)) {
      if (reported[e] <= instance.grid.snap_down_units(d.bids[e])) r_set |= Mask{1} << e;
    }

    const std::vector<double>& q = ctx.q_for(s_star);
    trace.q = q;
    for (int e : mask_elements(s_star)) {
      trace.a_threshold_units[e] = a_threshold_units(instance.grid, q[e], v1);
      if (reported[e] <= trace.a_threshold_units[e]) a_set |= Mask{1} << e;
    }
    double q_prefix = 0.0;
    for (int e : mask_elements(a_set)) {
      q_prefix += q[e];
      if (q_prefix <= v1 / 4.0) {
        r_prime |= Mask{1} << e;
      } else {
        break;
      }
    }
  }
  trace.r_set = r_set;
  trace.a_set = a_set;
  trace.r_prime = r_prime;

  const double alpha = branch_alpha(instance.epsilon);
  const double roll = tape.branch_uniform();
  if (roll < 0.8 * alpha) {
    out.branch = Branch::R;
    out.winners = r_set;
  } else if (roll < 0.8) {
    out.branch = Branch::RPrime;
    out.winners = r_prime;
  } else {
    out.branch = Branch::Singleton;
    out.winners = trace.e_star >= 0 ? (Mask{1} << trace.e_star) : 0;
  }
  return out;
}

// Largest grid cost at which `e` still belongs to the demand set, holding
// everyone else fixed; membership is monotone in the element's own cost so
// binary search over the grid is exact.
std::int64_t tau_prime(const Instance& instance, const std::vector<std::int64_t>& reported,
                       Mask u2, double v1, int e) {
  std::vector<std::int64_t> probe = reported;
  std::int64_t lo = reported[e];  // winner: known to belong at its report
  std::int64_t hi = instance.grid.budget_units();
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo + 1) / 2;
    probe[e] = mid;
    const Mask s = select_demand_set(instance.valuation, u2, instance.costs(probe), v1);
    if (contains(s, e)) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

std::vector<std::int64_t> payments_for(const Instance& instance,
                                       const std::vector<std::int64_t>& reported,
                                       const Allocation& alloc) {
  const int n = instance.n();
  std::vector<std::int64_t> pay(n, 0);
  const MechanismTrace& trace = alloc.trace;

  switch (alloc.branch) {
    case Branch::Singleton: {
      if (alloc.winners != 0) pay[trace.e_star] = instance.grid.budget_units();
      break;
    }
    case Branch::Fallback: {
      for (int e : mask_elements(alloc.winners)) {
        pay[e] = instance.grid.snap_down_units(trace.sampled_bids[e]);
      }
      break;
    }
    case Branch::R: {
      for (int e : mask_elements(alloc.winners)) {
        const std::int64_t tp = tau_prime(instance, reported, trace.u2, trace.v1, e);
        pay[e] = std::min(tp, instance.grid.snap_down_units(trace.sampled_bids[e]));
      }
      break;
    }
    case Branch::RPrime: {
      for (int e : mask_elements(alloc.winners)) {
        const std::int64_t tp = tau_prime(instance, reported, trace.u2, trace.v1, e);
        const std::int64_t tau_a = std::min(tp, trace.a_threshold_units[e]);

        // Replay the pruned set with e's cost below its threshold; the
        // winner must reappear in it, and its payment is tau_a.
        std::vector<std::int64_t> probe = reported;
        probe[e] = 0;
        const Mask s_replay =
            select_demand_set(instance.valuation, trace.u2, instance.costs(probe), trace.v1);
        if (s_replay != trace.s_star)
          throw IntegrityError("demand set changed under a winner cost decrease");
        Mask a_replay = 0;
        const std::vector<double>& q = trace.q;
        for (int f : mask_elements(s_replay)) {
          if (probe[f] <= trace.a_threshold_units[f]) a_replay |= Mask{1} << f;
        }
        Mask r_replay = 0;
        double q_prefix = 0.0;
        for (int f : mask_elements(a_replay)) {
          q_prefix += q[f];
          if (q_prefix <= trace.v1 / 4.0) {
            r_replay |= Mask{1} << f;
          } else {
            break;
          }
        }
        pay[e] = contains(r_replay, e) ? tau_a : 0;
      }
      break;
    }
  }
  return pay;
}

}  // namespace

MechanismOutcome run_mechanism(const Instance& instance,
                               const std::vector<std::int64_t>& reported_units,
                               const RandomTape& tape, MechanismContext* ctx,
                               const MechanismOptions& options) {
  std::optional<MechanismContext> local;
  if (ctx == nullptr) {
    local.emplace(instance);
    ctx = &*local;
  }
  const Allocation alloc = run_allocation(instance, reported_units, tape, *ctx, options);
  MechanismOutcome out;
  out.branch = alloc.branch;
  out.winners = alloc.winners;
  out.trace = alloc.trace;
  out.payment_units = payments_for(instance, reported_units, alloc);
  out.value = instance.valuation.value(out.winners);
  return out;
}

std::vector<std::int64_t> threshold_payments(const Instance& instance,
                                             const std::vector<std::int64_t>& reported_units,
                                             const RandomTape& tape,
                                             const MechanismOutcome& outcome,
                                             MechanismContext* ctx,
                                             const MechanismOptions& options) {
  std::optional<MechanismContext> local;
  if (ctx == nullptr) {
    local.emplace(instance);
    ctx = &*local;
  }
  const Allocation alloc = run_allocation(instance, reported_units, tape, *ctx, options);
  if (alloc.branch != outcome.branch || alloc.winners != outcome.winners ||
      !alloc.trace.same_allocation(outcome.trace)) {
    throw IntegrityError("outcome does not replay from this tape and report");
  }
  return payments_for(instance, reported_units, alloc);
}

std::string outcome_to_json(const MechanismOutcome& outcome) {
  nlohmann::json j;
  j["branch"] = branch_name(outcome.branch);
  j["winners"] = mask_elements(outcome.winners);
  j["value"] = outcome.value;
  nlohmann::json payments = nlohmann::json::object();
  for (std::size_t e = 0; e < outcome.payment_units.size(); ++e) {
    if (outcome.payment_units[e] != 0) payments[std::to_string(e)] = outcome.payment_units[e];
  }
  j["payments_units"] = payments;

  const MechanismTrace& t = outcome.trace;
  nlohmann::json trace;
  trace["active"] = mask_elements(t.active);
  trace["u1"] = mask_elements(t.u1);
  trace["u2"] = mask_elements(t.u2);
  trace["v1"] = t.v1;
  trace["s_star"] = mask_elements(t.s_star);
  trace["kappa"] = t.kappa;
  trace["support_index"] = t.support_index;
  trace["d"] = t.sampled_bids;
  trace["r"] = mask_elements(t.r_set);
  trace["q"] = t.q;
  trace["a_threshold_units"] = t.a_threshold_units;
  trace["a"] = mask_elements(t.a_set);
  trace["r_prime"] = mask_elements(t.r_prime);
  trace["e_star"] = t.e_star;
  j["trace"] = trace;
  return j.dump(2);
}

}  // namespace bfm
