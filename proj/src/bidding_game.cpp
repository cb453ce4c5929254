#include "bfm/bidding_game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

#include "bfm/errors.hpp"
#include "bfm/rng.hpp"
#include "bfm/simplex.hpp"

namespace bfm {

std::size_t uniform_grid_size(int n, int grid_bits) {
  // Nonnegative integer vectors of length n with sum <= 2^grid_bits:
  // C(2^g + n, n), with a saturation guard.
  const std::size_t total = (std::size_t{1} << grid_bits) + static_cast<std::size_t>(n);
  std::size_t count = 1;
  for (int i = 1; i <= n; ++i) {
    count = count * (total - n + i) / static_cast<std::size_t>(i);
    if (count > (std::size_t{1} << 40)) return count;
  }
  return count;
}

GameInstance GameInstance::uniform_grid(const Valuation& v, const CostGrid& grid, double gamma,
                                        int grid_bits, std::size_t max_strategies) {
  if (grid_bits < 0 || grid_bits > grid.bits)
    throw MalformedInputError("strategy grid must be at least as coarse as the cost grid");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw MalformedInputError("gamma must lie in (0, 1]");
  if (uniform_grid_size(v.n(), grid_bits) > max_strategies)
    throw CapacityError("uniform strategy grid exceeds the strategy cap");

  GameInstance game;
  game.valuation = &v;
  game.grid = grid;
  game.gamma = gamma;

  const std::int64_t coarse_step = std::int64_t{1} << (grid.bits - grid_bits);
  const std::int64_t coarse_total = std::int64_t{1} << grid_bits;
  std::vector<std::int64_t> current(v.n(), 0);
  // Depth-first enumeration in lexicographic order.
  auto recurse = [&](auto&& self, int index, std::int64_t used) -> void {
    if (index == v.n()) {
      std::vector<std::int64_t> units(v.n());
      for (int e = 0; e < v.n(); ++e) units[e] = current[e] * coarse_step;
      game.strategies.push_back(std::move(units));
      return;
    }
    for (std::int64_t k = 0; used + k <= coarse_total; ++k) {
      current[index] = k;
      self(self, index + 1, used + k);
    }
    current[index] = 0;
  };
  recurse(recurse, 0, 0);
  return game;
}

void GameInstance::validate() const {
  if (valuation == nullptr) throw MalformedInputError("game has no valuation");
  if (strategies.empty()) throw MalformedInputError("strategy set must be nonempty");
  std::set<std::vector<std::int64_t>> seen;
  for (const auto& s : strategies) {
    if (static_cast<int>(s.size()) != valuation->n())
      throw MalformedInputError("strategy length mismatch");
    std::int64_t total = 0;
    for (std::int64_t u : s) {
      if (u < 0) throw MalformedInputError("strategy entries must be nonnegative");
      total += u;
    }
    if (total > grid.budget_units()) throw MalformedInputError("strategy exceeds the budget");
    if (!seen.insert(s).second) throw MalformedInputError("duplicate strategy");
  }
}

double payoff_units(const Valuation& v, std::span<const std::int64_t> rival_units,
                    std::span<const std::int64_t> winner_units) {
  Mask winners = 0;
  for (int e = 0; e < v.n(); ++e) {
    if (rival_units[e] <= winner_units[e]) winners |= Mask{1} << e;
  }
  return v.value(winners);
}

double payoff(const Valuation& v, const CostGrid& grid, std::span<const double> winner_bids,
              std::span<const double> rival_bids) {
  if (static_cast<int>(winner_bids.size()) != v.n() ||
      static_cast<int>(rival_bids.size()) != v.n())
    throw MalformedInputError("bid vector length mismatch");
  Mask winners = 0;
  for (int e = 0; e < v.n(); ++e) {
    if (rival_bids[e] <= grid.amount(grid.snap_down_units(winner_bids[e]))) winners |= Mask{1} << e;
  }
  return v.value(winners);
}

PayoffMatrix PayoffMatrix::transposed() const {
  PayoffMatrix out;
  out.k = k;
  out.value_total = value_total;
  out.min_symmetric_slack = min_symmetric_slack;
  out.entries.resize(entries.size());
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) out.entries[d * k + c] = entries[c * k + d];
  }
  return out;
}

PayoffMatrix build_payoff_matrix(const GameInstance& game) {
  game.validate();
  const Valuation& v = *game.valuation;
  const double total = v.value(full_mask(v.n()));
  if (!(total > 0.0)) throw MalformedInputError("payoff matrix needs v(U) > 0");

  const std::size_t k = game.strategies.size();
  PayoffMatrix m;
  m.k = k;
  m.value_total = total;
  m.entries.assign(k * k, 0.0);

  std::vector<double> raw(k * k, 0.0);
  auto fill_rows = [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      for (std::size_t d = 0; d < k; ++d) {
        raw[c * k + d] = payoff_units(v, game.strategies[c], game.strategies[d]);
      }
    }
  };
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (k >= 512 && hw > 1) {
    std::vector<std::thread> workers;
    const std::size_t chunk = (k + hw - 1) / hw;
    for (std::size_t begin = 0; begin < k; begin += chunk) {
      workers.emplace_back(fill_rows, begin, std::min(k, begin + chunk));
    }
    for (auto& w : workers) w.join();
  } else {
    fill_rows(0, k);
  }

  double min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) {
      m.entries[c * k + d] = raw[c * k + d] / total;
      min_slack = std::min(min_slack, raw[c * k + d] + raw[d * k + c] - total);
    }
  }
  m.min_symmetric_slack = min_slack;
  return m;
}

GameSolution solve_matrix_game(const PayoffMatrix& m) {
  const std::size_t k = m.k;
  if (k == 0) throw MalformedInputError("empty payoff matrix");

  // maximize t  s.t.  t - sum_d M[c][d] x_d <= 0 for all c,  sum x = 1.
  std::vector<double> objective(k + 1, 0.0);
  objective[k] = 1.0;

  std::vector<lp::Constraint> rows;
  rows.reserve(k + 1);
  for (std::size_t c = 0; c < k; ++c) {
    lp::Constraint row;
    row.coeffs.assign(k + 1, 0.0);
    for (std::size_t d = 0; d < k; ++d) row.coeffs[d] = -m.at(c, d);
    row.coeffs[k] = 1.0;
    row.rhs = 0.0;
    rows.push_back(std::move(row));
  }
  lp::Constraint mass;
  mass.coeffs.assign(k + 1, 0.0);
  for (std::size_t d = 0; d < k; ++d) mass.coeffs[d] = 1.0;
  mass.rhs = 1.0;
  mass.sense = lp::Sense::Eq;
  rows.push_back(std::move(mass));

  lp::Options opt;
  opt.max_iterations = std::max<long>(200000, static_cast<long>(40 * k));
  const lp::Solution sol = lp::maximize(objective, rows, opt);
  if (sol.status != lp::Status::Optimal)
    throw SolverError("matrix game LP did not converge", sol.objective, 1.0);

  GameSolution out;
  out.value = sol.objective;
  out.trace_hash = sol.trace_hash;
  out.strategy.probs.assign(sol.x.begin(), sol.x.begin() + k);
  for (double& p : out.strategy.probs) p = std::max(0.0, p);
  return out;
}

GameSolution existence_lp(const GameInstance& game) {
  return solve_matrix_game(build_payoff_matrix(game));
}

namespace {

struct SnappedSupport {
  std::vector<std::vector<std::int64_t>> bid_units;  // per support vector
  std::vector<double> probs;
};

SnappedSupport snap_support(const CostGrid& grid, std::span<const WeightedBid> distribution,
                            int n) {
  SnappedSupport out;
  for (const auto& wb : distribution) {
    if (static_cast<int>(wb.bids.size()) != n)
      throw MalformedInputError("support vector length mismatch");
    std::vector<std::int64_t> units(n);
    for (int e = 0; e < n; ++e) units[e] = grid.snap_down_units(wb.bids[e]);
    out.bid_units.push_back(std::move(units));
    out.probs.push_back(wb.prob);
  }
  return out;
}

}  // namespace

AdversaryResult adversary_best_response(const Valuation& v, const CostGrid& grid,
                                        std::span<const WeightedBid> distribution,
                                        double adversary_budget, AdversaryOptions options) {
  const int n = v.n();
  const Mask scope = options.scope == 0 ? full_mask(n) : options.scope;
  if (subset_size(scope) > options.max_elements)
    throw CapacityError("adversary search scope exceeds the element cap");
  if (distribution.size() > options.max_support)
    throw CapacityError("adversary search support exceeds the support cap");

  const SnappedSupport support = snap_support(grid, distribution, n);
  const std::size_t k = support.bid_units.size();
  const auto elements = mask_elements(scope);
  const std::int64_t budget_units =
      static_cast<std::int64_t>(adversary_budget / grid.step() + kGridSnapTol);

  // Candidate values per element: zero, or one step above a posted bid.
  std::vector<std::vector<std::int64_t>> candidates(elements.size());
  for (std::size_t i = 0; i < elements.size(); ++i) {
    std::set<std::int64_t> vals{0};
    for (const auto& units : support.bid_units) {
      const std::int64_t beat = units[elements[i]] + 1;
      if (beat <= budget_units) vals.insert(beat);
    }
    candidates[i].assign(vals.begin(), vals.end());
  }

  std::vector<Mask> wins(k, 0);
  std::vector<std::int64_t> current(elements.size(), 0);
  AdversaryResult best;
  best.expected_payoff = std::numeric_limits<double>::infinity();

  auto expected = [&]() {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += support.probs[j] * v.value(wins[j]);
    return sum;
  };

  auto recurse = [&](auto&& self, std::size_t index, std::int64_t used) -> void {
    // Wins already decided can only grow; prune when even the current
    // partial payoff cannot beat the incumbent.
    if (expected() >= best.expected_payoff) return;
    if (index == elements.size()) {
      const double value = expected();
      if (value < best.expected_payoff) {
        best.expected_payoff = value;
        best.cost_units.assign(n, 0);
        for (std::size_t i = 0; i < elements.size(); ++i) best.cost_units[elements[i]] = current[i];
      }
      return;
    }
    const int e = elements[index];
    const Mask bit = Mask{1} << e;
    for (std::int64_t val : candidates[index]) {
      if (used + val > budget_units) break;
      current[index] = val;
      std::vector<std::size_t> flipped;
      for (std::size_t j = 0; j < k; ++j) {
        if (val <= support.bid_units[j][e]) {
          wins[j] |= bit;
          flipped.push_back(j);
        }
      }
      self(self, index + 1, used + val);
      for (std::size_t j : flipped) wins[j] &= ~bit;
      current[index] = 0;
    }
  };
  recurse(recurse, 0, 0);

  if (best.cost_units.empty()) {
    // Scope empty: the all-zero vector is the trivial best response.
    best.cost_units.assign(n, 0);
    best.expected_payoff = expected();
  }
  return best;
}

AdversaryResult adversary_best_response(const Valuation& v, const ThresholdDistribution& dist,
                                        const CostGrid& grid, double adversary_budget,
                                        AdversaryOptions options) {
  std::vector<WeightedBid> bids;
  bids.reserve(dist.support.size());
  for (const auto& [vec, prob] : dist.support) bids.push_back({vec.bids, prob});
  if (options.scope == 0) options.scope = dist.base;
  return adversary_best_response(v, grid, bids, adversary_budget, options);
}

AdversaryResult adversary_anneal(const Valuation& v, const CostGrid& grid,
                                 std::span<const WeightedBid> distribution,
                                 double adversary_budget, Mask scope, std::uint64_t seed,
                                 int steps) {
  const int n = v.n();
  const Mask in_scope = scope == 0 ? full_mask(n) : scope;
  const SnappedSupport support = snap_support(grid, distribution, n);
  const std::size_t k = support.bid_units.size();
  const auto elements = mask_elements(in_scope);
  const std::int64_t budget_units =
      static_cast<std::int64_t>(adversary_budget / grid.step() + kGridSnapTol);

  std::vector<std::vector<std::int64_t>> candidates(elements.size());
  for (std::size_t i = 0; i < elements.size(); ++i) {
    std::set<std::int64_t> vals{0};
    for (const auto& units : support.bid_units) {
      const std::int64_t beat = units[elements[i]] + 1;
      if (beat <= budget_units) vals.insert(beat);
    }
    candidates[i].assign(vals.begin(), vals.end());
  }

  std::vector<std::int64_t> current(n, 0);
  auto evaluate = [&](const std::vector<std::int64_t>& c) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      Mask winners = 0;
      for (std::size_t i = 0; i < elements.size(); ++i) {
        if (c[elements[i]] <= support.bid_units[j][elements[i]])
          winners |= Mask{1} << elements[i];
      }
      sum += support.probs[j] * v.value(winners);
    }
    return sum;
  };

  AdversaryResult best;
  best.heuristic = true;
  best.cost_units = current;
  best.expected_payoff = evaluate(current);

  SequentialRng rng(seed, 29);
  std::int64_t used = 0;
  double energy = best.expected_payoff;
  for (int step = 0; step < steps; ++step) {
    if (elements.empty()) break;
    const std::size_t i = rng.next_below(elements.size());
    const std::int64_t proposal = candidates[i][rng.next_below(candidates[i].size())];
    const int e = elements[i];
    const std::int64_t delta = proposal - current[e];
    if (used + delta > budget_units) continue;
    const std::int64_t saved = current[e];
    current[e] = proposal;
    const double proposed = evaluate(current);
    const double temperature =
        0.1 * std::max(1.0, v.value(in_scope)) * (1.0 - static_cast<double>(step) / steps);
    const bool accept = proposed <= energy ||
                        rng.next_uniform() < std::exp((energy - proposed) / temperature);
    if (accept) {
      energy = proposed;
      used += delta;
      if (proposed < best.expected_payoff) {
        best.expected_payoff = proposed;
        best.cost_units = current;
      }
    } else {
      current[e] = saved;
    }
  }
  return best;
}

double min_expected_payoff(const Valuation& v, const CostGrid& grid,
                           std::span<const WeightedBid> distribution,
                           std::span<const std::vector<std::int64_t>> candidates, Mask scope) {
  const int n = v.n();
  const Mask in_scope = scope == 0 ? full_mask(n) : scope;
  const SnappedSupport support = snap_support(grid, distribution, n);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    double sum = 0.0;
    for (std::size_t j = 0; j < support.bid_units.size(); ++j) {
      Mask winners = 0;
      for (int e : mask_elements(in_scope)) {
        if (c[e] <= support.bid_units[j][e]) winners |= Mask{1} << e;
      }
      sum += support.probs[j] * v.value(winners);
    }
    best = std::min(best, sum);
  }
  return best;
}

PureCounterexample counterexample_pure(const Valuation& v, const CostGrid& grid,
                                       std::span<const std::int64_t> bid_units) {
  const int n = v.n();
  if (static_cast<int>(bid_units.size()) != n) throw MalformedInputError("bid vector length mismatch");

  std::int64_t total = 0;
  std::int64_t min_positive = std::numeric_limits<std::int64_t>::max();
  int survivor = -1;
  for (int e = 0; e < n; ++e) {
    if (bid_units[e] < 0) throw MalformedInputError("bids must be nonnegative");
    total += bid_units[e];
    if (bid_units[e] > 0) {
      min_positive = std::min(min_positive, bid_units[e]);
      if (survivor < 0) survivor = e;
    }
  }
  if (survivor < 0)
    throw DegenerateInputError("all-zero bid vector has no limiting rival (payoff is already v(U))");
  if (total > grid.budget_units()) throw MalformedInputError("bids exceed the budget");

  // Work in units of step / n so that epsilon = min_positive / n is an
  // integer and the sum identity is exact.
  PureCounterexample out;
  out.scale = n;
  out.survivor = survivor;
  out.scaled_units.assign(n, 0);
  for (int e = 0; e < n; ++e) {
    if (e == survivor) {
      out.scaled_units[e] =
          static_cast<std::int64_t>(n) * bid_units[e] - static_cast<std::int64_t>(n - 1) * min_positive;
    } else {
      out.scaled_units[e] = static_cast<std::int64_t>(n) * bid_units[e] + min_positive;
    }
  }
  out.costs.assign(n, 0.0);
  for (int e = 0; e < n; ++e) {
    out.costs[e] = static_cast<double>(out.scaled_units[e]) * grid.step() / static_cast<double>(n);
  }
  return out;
}

}  // namespace bfm
