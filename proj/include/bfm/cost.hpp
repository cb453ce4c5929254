#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "bfm/errors.hpp"
#include "bfm/subsets.hpp"

namespace bfm {

// Tolerance used when snapping a real-valued threshold onto the cost grid:
// thresholds that are mathematically on a grid point but carry float dirt
// up to this relative slack still land on that grid point.
inline constexpr double kGridSnapTol = 1e-9;

// Dyadic cost grid: every cost is an integer multiple of budget / 2^bits.
// Keeping costs as integer unit counts makes every comparison in the code
// base exact.
struct CostGrid {
  double budget = 1.0;
  int bits = 10;

  double step() const { return budget / static_cast<double>(std::int64_t{1} << bits); }
  std::int64_t budget_units() const { return std::int64_t{1} << bits; }
  double amount(std::int64_t units) const { return static_cast<double>(units) * step(); }

  // Largest grid point that does not exceed `value` (plus snap slack).
  std::int64_t snap_down_units(double value) const {
    if (!(value > 0.0)) return 0;
    double scaled = value / step() + kGridSnapTol;
    double capped = std::min(scaled, static_cast<double>(std::int64_t{1} << (bits + 8)));
    return static_cast<std::int64_t>(std::floor(capped));
  }

  // Exact test for `units * step <= amount`.
  bool fits(std::int64_t units, double amount_limit) const {
    return static_cast<double>(units) <= amount_limit / step() + kGridSnapTol;
  }

  bool operator==(const CostGrid&) const = default;
};

// Per-element nonnegative costs on a grid. The same representation holds
// true costs and reported costs; callers keep the two apart.
struct CostVector {
  CostGrid grid;
  std::vector<std::int64_t> units;

  int size() const { return static_cast<int>(units.size()); }

  double amount(int e) const { return grid.amount(units.at(e)); }

  std::int64_t total_units(Mask s) const {
    std::int64_t sum = 0;
    for (int e : mask_elements(s)) sum += units.at(e);
    return sum;
  }

  double total(Mask s) const { return grid.amount(total_units(s)); }

  void validate() const {
    for (std::int64_t u : units) {
      if (u < 0) throw MalformedInputError("cost units must be nonnegative");
    }
  }
};

}  // namespace bfm
