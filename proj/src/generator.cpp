#include "bfm/generator.hpp"

#include <algorithm>
#include <cmath>

#include "bfm/errors.hpp"
#include "bfm/rng.hpp"

namespace bfm {

namespace {

std::vector<double> random_weights(SequentialRng& rng, int n, int lo, int hi) {
  std::vector<double> w(n);
  for (int e = 0; e < n; ++e) w[e] = static_cast<double>(rng.next_range(lo, hi));
  return w;
}

Valuation random_xos(SequentialRng& rng, const GeneratorSpec& spec) {
  std::vector<std::vector<double>> clauses;
  const int count = std::max(1, spec.clauses);
  for (int k = 0; k < count; ++k) {
    std::vector<double> clause(spec.n, 0.0);
    for (int e = 0; e < spec.n; ++e) {
      // Sparse clauses make the max structure matter.
      if (rng.next_below(4) != 0) clause[e] = static_cast<double>(rng.next_range(0, spec.max_weight));
    }
    clauses.push_back(std::move(clause));
  }
  return Valuation::xos(spec.n, std::move(clauses));
}

Valuation random_coverage(SequentialRng& rng, const GeneratorSpec& spec) {
  const int points = spec.points > 0 ? spec.points : 2 * spec.n;
  if (points > 64) throw MalformedInputError("coverage generator supports at most 64 points");
  std::vector<double> point_weights(points);
  for (int p = 0; p < points; ++p) point_weights[p] = static_cast<double>(rng.next_range(1, spec.max_weight));
  std::vector<std::vector<int>> covers(spec.n);
  for (int e = 0; e < spec.n; ++e) {
    for (int p = 0; p < points; ++p) {
      if (rng.next_below(3) == 0) covers[e].push_back(p);
    }
    if (covers[e].empty()) covers[e].push_back(static_cast<int>(rng.next_below(points)));
  }
  return Valuation::coverage(spec.n, std::move(point_weights), std::move(covers));
}

Valuation random_explicit(SequentialRng& rng, const GeneratorSpec& spec) {
  if (spec.n > 12) throw CapacityError("explicit generator capped at n = 12");
  for (int attempt = 0; attempt < 100; ++attempt) {
    const Valuation base = random_xos(rng, spec);
    const std::size_t size = std::size_t{1} << spec.n;

    // Concave size bump keeps most samples monotone; per-set noise plus the
    // cap push the table strictly outside the max-of-additive family.
    std::vector<double> bump(spec.n + 1, 0.0);
    double delta = static_cast<double>(rng.next_range(1, 3));
    for (int k = 1; k <= spec.n; ++k) {
      bump[k] = bump[k - 1] + delta;
      if (delta > 0 && rng.next_below(2) == 0) delta -= 1;
    }

    std::vector<double> values(size, 0.0);
    double max_value = 0.0;
    for (std::size_t m = 1; m < size; ++m) {
      const double noisy = 4.0 * base.value(static_cast<Mask>(m)) +
                           bump[subset_size(static_cast<Mask>(m))] +
                           static_cast<double>(rng.next_below(2));
      values[m] = noisy;
      max_value = std::max(max_value, noisy);
    }
    const double cap = std::floor(max_value * (0.7 + 0.25 * rng.next_uniform()));
    for (std::size_t m = 1; m < size; ++m) values[m] = std::min(values[m], std::max(1.0, cap));

    Valuation candidate = Valuation::table(spec.n, std::move(values));
    if (check_structure(candidate).all_ok()) return candidate;
  }
  throw CapacityError("explicit generator failed structure checks 100 times");
}

std::vector<std::int64_t> random_costs(SequentialRng& rng, const GeneratorSpec& spec,
                                       const Valuation& v) {
  const std::int64_t max_units = std::int64_t{1} << spec.bits;
  std::vector<std::int64_t> units(spec.n, 0);
  if (spec.cost_model == "uniform") {
    for (int e = 0; e < spec.n; ++e) units[e] = rng.next_range(0, max_units);
    return units;
  }
  if (spec.cost_model == "correlated") {
    double max_single = 0.0;
    for (int e = 0; e < spec.n; ++e) max_single = std::max(max_single, v.value(Mask{1} << e));
    for (int e = 0; e < spec.n; ++e) {
      const double share = max_single > 0.0 ? v.value(Mask{1} << e) / max_single : 0.0;
      const double noise = 0.25 + rng.next_uniform();  // [0.25, 1.25)
      const double raw = std::round(static_cast<double>(max_units) * share * noise);
      units[e] = std::clamp<std::int64_t>(static_cast<std::int64_t>(raw), 0, max_units);
    }
    return units;
  }
  throw MalformedInputError("unknown cost model: " + spec.cost_model);
}

}  // namespace

Instance generate_instance(const GeneratorSpec& spec, std::uint64_t seed) {
  if (spec.n < 1 || spec.n > kMaxElements) throw MalformedInputError("generator: n out of range");
  if (spec.bits < 1 || spec.bits > 16) throw MalformedInputError("generator: bits out of range");
  if (!(spec.budget > 0.0)) throw MalformedInputError("generator: budget must be positive");

  SequentialRng rng(seed, 17);
  Instance inst;
  if (spec.family == "additive") {
    inst.valuation = Valuation::additive(random_weights(rng, spec.n, 1, spec.max_weight));
  } else if (spec.family == "xos") {
    inst.valuation = random_xos(rng, spec);
  } else if (spec.family == "coverage") {
    inst.valuation = random_coverage(rng, spec);
  } else if (spec.family == "explicit") {
    inst.valuation = random_explicit(rng, spec);
  } else {
    throw MalformedInputError("unknown family: " + spec.family);
  }
  inst.grid.budget = spec.budget;
  inst.grid.bits = spec.bits;
  inst.epsilon = spec.epsilon;
  inst.true_cost_units = random_costs(rng, spec, inst.valuation);
  inst.validate();
  return inst;
}

}  // namespace bfm
