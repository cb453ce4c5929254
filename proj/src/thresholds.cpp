#include "bfm/thresholds.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <ostream>

#include "bfm/errors.hpp"

namespace bfm {

double ThresholdVector::total() const {
  double sum = 0.0;
  for (int e : mask_elements(base)) sum += bids[e];
  return sum;
}

std::size_t ThresholdDistribution::sample_index(double uniform) const {
  double cum = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    cum += support[i].second;
    if (uniform < cum) return i;
  }
  return support.empty() ? 0 : support.size() - 1;
}

ThresholdVector build_threshold_vector(const MarginalLpSolver& solver, Mask base, double kappa,
                                       double budget) {
  if (base == 0) throw MalformedInputError("threshold vector needs a nonempty base");
  if (!(budget > 0.0)) throw MalformedInputError("budget must be positive");
  if (!(kappa > 0.0 && kappa < 1.0)) throw MalformedInputError("kappa must lie in (0, 1)");

  const MarginalSolve& solved = solver.solve(base, kappa);
  ThresholdVector out;
  out.base = base;
  out.budget = budget;
  out.bids.assign(solver.valuation().n(), 0.0);

  const double price_total = solved.dual.price_total();
  if (price_total > 0.0) {
    for (int e : mask_elements(base)) {
      out.bids[e] = solved.dual.prices[e] * budget / price_total;
    }
  } else {
    const double share = budget / subset_size(base);
    for (int e : mask_elements(base)) out.bids[e] = share;
  }
  return out;
}

ThresholdDistribution build_distribution(const MarginalLpSolver& solver, Mask base, double budget,
                                         int ground_n) {
  if (base == 0) throw MalformedInputError("distribution needs a nonempty base");
  if (ground_n < 8) throw MalformedInputError("distribution construction requires ground size >= 8");

  const KappaSearchResult search = solver.find_kappa(base, ground_n);
  const MarginalSolve& solved = solver.solve(base, search.kappa);

  ThresholdDistribution out;
  out.base = base;
  out.kappa = search.kappa;
  out.budget = budget;

  double mass = 0.0;
  for (const auto& [mask, prob] : solved.primal.support) {
    out.support.emplace_back(build_threshold_vector(solver, mask, search.kappa, budget), prob);
    mass += prob;
  }
  ThresholdVector zero;
  zero.base = base;
  zero.budget = budget;
  zero.bids.assign(solver.valuation().n(), 0.0);
  out.support.emplace_back(std::move(zero), std::max(0.0, 1.0 - mass));
  return out;
}

Mask winning_set(const ThresholdVector& d, const CostVector& costs) {
  Mask out = 0;
  for (int e : mask_elements(d.base)) {
    if (costs.units[e] <= costs.grid.snap_down_units(d.bids[e])) out |= Mask{1} << e;
  }
  return out;
}

bool pure_payoff_guarantee(const MarginalLpSolver& solver, Mask base, double kappa, double budget,
                           const ThresholdVector& d, const CostVector& costs, double tol) {
  if (!costs.grid.fits(costs.total_units(base), kappa * budget))
    throw MalformedInputError("adversary cost exceeds kappa * budget on the base set");
  const double payoff = solver.valuation().value(winning_set(d, costs));
  const double bound = solver.valuation().value(base) - solver.opt_value(base, kappa);
  return payoff >= bound - tol;
}

namespace {
void append_number(std::string& line, double value) {
  std::array<char, 32> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  line.append(buf.data(), ptr);
}
}  // namespace

void dump_distribution(const ThresholdDistribution& dist, const CostGrid& grid,
                       std::ostream& out) {
  for (const auto& [vec, prob] : dist.support) {
    std::string line;
    append_number(line, prob);
    line += "; ";
    for (std::size_t e = 0; e < vec.bids.size(); ++e) {
      if (e) line += ",";
      append_number(line, vec.bids[e] / grid.step());
    }
    out << line << "\n";
  }
}

}  // namespace bfm
