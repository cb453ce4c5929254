#include "bfm/valuation.hpp"

#include <algorithm>
#include <bit>

#include "bfm/errors.hpp"

namespace bfm {

namespace {
constexpr int kTableBits = 14;

void require_count(int n) {
  if (n < 1 || n > kMaxElements) throw MalformedInputError("ground set size out of range");
}

void require_nonnegative(const std::vector<double>& w) {
  for (double x : w) {
    if (!(x >= 0.0)) throw MalformedInputError("weights must be nonnegative");
  }
}
}  // namespace

Valuation Valuation::additive(std::vector<double> weights) {
  require_count(static_cast<int>(weights.size()));
  require_nonnegative(weights);
  Valuation v;
  v.kind_ = Kind::Additive;
  v.n_ = static_cast<int>(weights.size());
  v.weights_ = std::move(weights);
  v.build_table();
  return v;
}

Valuation Valuation::xos(int n, std::vector<std::vector<double>> clauses) {
  require_count(n);
  if (clauses.empty()) throw MalformedInputError("xos valuation needs at least one clause");
  for (const auto& c : clauses) {
    if (static_cast<int>(c.size()) != n) throw MalformedInputError("xos clause length mismatch");
    require_nonnegative(c);
  }
  Valuation v;
  v.kind_ = Kind::Xos;
  v.n_ = n;
  v.clauses_ = std::move(clauses);
  v.build_table();
  return v;
}

Valuation Valuation::coverage(int n, std::vector<double> point_weights,
                              std::vector<std::vector<int>> covers) {
  require_count(n);
  if (static_cast<int>(covers.size()) != n) throw MalformedInputError("coverage: one cover set per element");
  if (point_weights.size() > 64) throw MalformedInputError("coverage: at most 64 points");
  require_nonnegative(point_weights);
  Valuation v;
  v.kind_ = Kind::Coverage;
  v.n_ = n;
  v.point_weights_ = std::move(point_weights);
  v.cover_bits_.assign(n, 0);
  for (int e = 0; e < n; ++e) {
    for (int pt : covers[e]) {
      if (pt < 0 || pt >= static_cast<int>(v.point_weights_.size()))
        throw MalformedInputError("coverage: point index out of range");
      v.cover_bits_[e] |= std::uint64_t{1} << pt;
    }
  }
  v.build_table();
  return v;
}

Valuation Valuation::table(int n, std::vector<double> values) {
  require_count(n);
  if (n > 16) throw CapacityError("explicit tables supported up to n = 16");
  if (values.size() != (std::size_t{1} << n)) throw MalformedInputError("table must list 2^n values");
  for (double x : values) {
    if (!(x >= 0.0)) throw MalformedInputError("table values must be nonnegative");
  }
  Valuation v;
  v.kind_ = Kind::Table;
  v.n_ = n;
  v.table_ = std::move(values);
  return v;
}

Valuation Valuation::budget_additive(std::vector<double> weights, double cap) {
  require_count(static_cast<int>(weights.size()));
  require_nonnegative(weights);
  if (!(cap >= 0.0)) throw MalformedInputError("cap must be nonnegative");
  Valuation v;
  v.kind_ = Kind::BudgetAdditive;
  v.n_ = static_cast<int>(weights.size());
  v.weights_ = std::move(weights);
  v.cap_ = cap;
  v.build_table();
  return v;
}

void Valuation::build_table() {
  if (n_ > kTableBits) return;
  const std::size_t size = std::size_t{1} << n_;
  table_.assign(size, 0.0);
  switch (kind_) {
    case Kind::Additive:
      for (std::size_t m = 1; m < size; ++m) {
        const int low = std::countr_zero(static_cast<Mask>(m));
        table_[m] = table_[m & (m - 1)] + weights_[low];
      }
      break;
    case Kind::BudgetAdditive: {
      for (std::size_t m = 1; m < size; ++m) {
        const int low = std::countr_zero(static_cast<Mask>(m));
        table_[m] = table_[m & (m - 1)] + weights_[low];
      }
      for (std::size_t m = 0; m < size; ++m) table_[m] = std::min(table_[m], cap_);
      break;
    }
    case Kind::Xos: {
      std::vector<double> clause_sum(size, 0.0);
      for (const auto& clause : clauses_) {
        clause_sum[0] = 0.0;
        for (std::size_t m = 1; m < size; ++m) {
          const int low = std::countr_zero(static_cast<Mask>(m));
          clause_sum[m] = clause_sum[m & (m - 1)] + clause[low];
        }
        for (std::size_t m = 0; m < size; ++m) table_[m] = std::max(table_[m], clause_sum[m]);
      }
      break;
    }
    case Kind::Coverage: {
      std::vector<std::uint64_t> covered(size, 0);
      for (std::size_t m = 1; m < size; ++m) {
        const int low = std::countr_zero(static_cast<Mask>(m));
        covered[m] = covered[m & (m - 1)] | cover_bits_[low];
      }
      for (std::size_t m = 0; m < size; ++m) {
        double sum = 0.0;
        std::uint64_t bits = covered[m];
        while (bits) {
          sum += point_weights_[std::countr_zero(bits)];
          bits &= bits - 1;
        }
        table_[m] = sum;
      }
      break;
    }
    case Kind::Table:
      break;
  }
}

double Valuation::value_uncached(Mask s) const {
  switch (kind_) {
    case Kind::Additive: {
      double sum = 0.0;
      for (Mask m = s; m != 0; m &= m - 1) sum += weights_[std::countr_zero(m)];
      return sum;
    }
    case Kind::BudgetAdditive: {
      double sum = 0.0;
      for (Mask m = s; m != 0; m &= m - 1) sum += weights_[std::countr_zero(m)];
      return std::min(sum, cap_);
    }
    case Kind::Xos: {
      double best = 0.0;
      for (const auto& clause : clauses_) {
        double sum = 0.0;
        for (Mask m = s; m != 0; m &= m - 1) sum += clause[std::countr_zero(m)];
        best = std::max(best, sum);
      }
      return best;
    }
    case Kind::Coverage: {
      std::uint64_t bits = 0;
      for (Mask m = s; m != 0; m &= m - 1) bits |= cover_bits_[std::countr_zero(m)];
      double sum = 0.0;
      while (bits) {
        sum += point_weights_[std::countr_zero(bits)];
        bits &= bits - 1;
      }
      return sum;
    }
    case Kind::Table:
      return table_[s];
  }
  return 0.0;
}

double Valuation::value(Mask s) const {
  if (!table_.empty()) return table_[s];
  return value_uncached(s);
}

std::vector<std::vector<int>> Valuation::covers() const {
  std::vector<std::vector<int>> out(n_);
  for (int e = 0; e < n_ && e < static_cast<int>(cover_bits_.size()); ++e) {
    std::uint64_t bits = cover_bits_[e];
    while (bits) {
      out[e].push_back(std::countr_zero(bits));
      bits &= bits - 1;
    }
  }
  return out;
}

std::string Valuation::kind_name() const {
  switch (kind_) {
    case Kind::Additive: return "additive";
    case Kind::Xos: return "xos";
    case Kind::Coverage: return "coverage";
    case Kind::Table: return "table";
    case Kind::BudgetAdditive: return "budget-additive";
  }
  return "?";
}

double eval(const Valuation& v, Mask s) {
  if ((s & ~full_mask(v.n())) != 0) throw MalformedInputError("subset not contained in ground set");
  return v.value(s);
}

Mask demand_set(const Valuation& v, std::span<const double> prices, Mask restricted) {
  if ((restricted & ~full_mask(v.n())) != 0)
    throw MalformedInputError("restriction not contained in ground set");
  if (static_cast<int>(prices.size()) < v.n())
    throw MalformedInputError("price vector shorter than ground set");
  for (int e : mask_elements(restricted)) {
    if (!(prices[e] >= 0.0)) throw MalformedInputError("prices must be nonnegative and finite");
  }

  // Closed form for additive valuations: per-element decision, ties toward
  // exclusion (consistent with smallest-mask tie-breaking).
  if (v.kind() == Valuation::Kind::Additive) {
    Mask out = 0;
    for (int e : mask_elements(restricted)) {
      if (v.weights()[e] > prices[e]) out |= Mask{1} << e;
    }
    return out;
  }

  Mask best = 0;
  double best_utility = 0.0;  // utility of the empty set
  if (v.has_table() && subset_size(restricted) > 18) {
    // Full scan with an incremental price-sum table.
    const std::size_t size = std::size_t{1} << v.n();
    static thread_local std::vector<double> price_sum;
    price_sum.assign(size, 0.0);
    for (std::size_t m = 1; m < size; ++m) {
      const int low = std::countr_zero(static_cast<Mask>(m));
      price_sum[m] = price_sum[m & (m - 1)] + prices[low];
    }
    for_each_subset(restricted, [&](Mask sub) {
      const double u = v.raw_table()[sub] - price_sum[sub];
      if (u > best_utility) {
        best_utility = u;
        best = sub;
      }
    });
    return best;
  }

  for_each_subset(restricted, [&](Mask sub) {
    double p = 0.0;
    for (Mask m = sub; m != 0; m &= m - 1) p += prices[std::countr_zero(m)];
    const double u = v.value(sub) - p;
    if (u > best_utility) {
      best_utility = u;
      best = sub;
    }
  });
  return best;
}

int best_singleton(const Valuation& v) {
  if (v.n() < 1) throw MalformedInputError("empty ground set");
  int best = 0;
  double best_value = v.value(Mask{1});
  for (int e = 1; e < v.n(); ++e) {
    const double val = v.value(Mask{1} << e);
    if (val > best_value) {
      best_value = val;
      best = e;
    }
  }
  return best;
}

KnapsackResult opt_knapsack(const Valuation& v, const CostVector& costs, double budget,
                            Mask restricted, int cap) {
  if ((restricted & ~full_mask(v.n())) != 0)
    throw MalformedInputError("restriction not contained in ground set");
  if (costs.size() != v.n()) throw MalformedInputError("cost vector length mismatch");
  if (subset_size(restricted) > cap) throw CapacityError("opt_knapsack restriction exceeds brute-force cap");

  const double unit_limit = budget / costs.grid.step() + kGridSnapTol;
  KnapsackResult best;  // empty set: value 0, always feasible
  for_each_subset(restricted, [&](Mask sub) {
    std::int64_t units = 0;
    for (Mask m = sub; m != 0; m &= m - 1) units += costs.units[std::countr_zero(m)];
    if (static_cast<double>(units) > unit_limit) return;
    const double val = v.value(sub);
    if (val > best.value) {
      best.value = val;
      best.witness = sub;
    }
  });
  return best;
}

StructureReport check_structure(const Valuation& v) {
  if (v.n() > 16) throw CapacityError("structure check capped at n = 16");
  StructureReport report;
  const Mask all = full_mask(v.n());
  report.normalized = v.value(0) == 0.0;

  report.monotone = true;
  for (Mask m = 0; m <= all && report.monotone; ++m) {
    for (int e = 0; e < v.n(); ++e) {
      if (contains(m, e)) continue;
      if (v.value(m | (Mask{1} << e)) < v.value(m) - 1e-12) {
        report.monotone = false;
        break;
      }
    }
  }

  report.subadditive = true;
  if (report.monotone) {
    // Under monotonicity it suffices to check disjoint pairs (replace T by
    // T minus S), which brings the pair walk down from 4^n to 3^n.
    for (Mask a = 0; a <= all && report.subadditive; ++a) {
      const double va = v.value(a);
      const Mask rest = all & ~a;
      for_each_subset(rest, [&](Mask b) {
        if (va + v.value(b) < v.value(a | b) - 1e-12) report.subadditive = false;
      });
    }
  } else {
    if (v.n() > 13) throw CapacityError("full-pair subadditivity check capped at n = 13");
    for (Mask a = 0; a <= all && report.subadditive; ++a) {
      const double va = v.value(a);
      for (Mask b = a; b <= all; ++b) {
        if (va + v.value(b) < v.value(a | b) - 1e-12) {
          report.subadditive = false;
          break;
        }
      }
    }
  }
  return report;
}

}  // namespace bfm
