#include "bfm/marginal_lp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>
#include <set>

#include "bfm/errors.hpp"
#include "bfm/simplex.hpp"

namespace bfm {

namespace {

std::uint64_t kappa_key(double kappa) { return std::bit_cast<std::uint64_t>(kappa); }

// Support entries below this mass are treated as zero and dropped.
constexpr double kMassEps = 1e-12;

MarginalSolve assemble(const Valuation& v, Mask base, double kappa,
                       const std::vector<Mask>& columns, const lp::Solution& sol,
                       bool used_cg, long extra_iterations) {
  MarginalSolve out;
  out.value = sol.objective;
  out.iterations = sol.iterations + extra_iterations;
  out.used_column_generation = used_cg;
  out.trace_hash = sol.trace_hash;

  out.primal.base = base;
  out.primal.kappa = kappa;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (sol.x[j] > kMassEps && columns[j] != 0) out.primal.support.emplace_back(columns[j], sol.x[j]);
  }
  std::sort(out.primal.support.begin(), out.primal.support.end());

  out.dual.base = base;
  out.dual.prices.assign(v.n(), 0.0);
  const auto elements = mask_elements(base);
  for (std::size_t i = 0; i < elements.size(); ++i) {
    out.dual.prices[elements[i]] = std::max(0.0, sol.duals[i]);
  }
  out.dual.mu = std::max(0.0, sol.duals[elements.size()]);
  return out;
}

}  // namespace

double MarginalDistribution::mass() const {
  double sum = 0.0;
  for (const auto& [mask, prob] : support) sum += prob;
  return sum;
}

double MarginalDistribution::marginal(int element) const {
  double sum = 0.0;
  for (const auto& [mask, prob] : support) {
    if (contains(mask, element)) sum += prob;
  }
  return sum;
}

double MarginalDistribution::expected_value(const Valuation& v) const {
  double sum = 0.0;
  for (const auto& [mask, prob] : support) sum += prob * v.value(mask);
  return sum;
}

double DualCertificate::price_total() const {
  double sum = 0.0;
  for (int e : mask_elements(base)) sum += prices[e];
  return sum;
}

int kappa_levels(int ground_n) {
  if (ground_n < 8) throw MalformedInputError("kappa ladder needs a ground set of at least 8");
  const double levels = std::log2(std::log2(static_cast<double>(ground_n)));
  return static_cast<int>(std::ceil(levels - 1e-12));
}

std::vector<double> kappa_ladder(int ground_n) {
  const int levels = kappa_levels(ground_n);
  std::vector<double> out;
  out.reserve(levels);
  for (int i = 1; i <= levels; ++i) out.push_back(std::ldexp(1.0, -(1 << i)));
  return out;
}

MarginalLpSolver::MarginalLpSolver(const Valuation& v, MarginalLpOptions options)
    : valuation_(&v), options_(options) {}

const MarginalSolve& MarginalLpSolver::solve(Mask base, double kappa) const {
  if (base == 0) throw MalformedInputError("bounded-marginal LP needs a nonempty base set");
  if ((base & ~full_mask(valuation_->n())) != 0)
    throw MalformedInputError("base set not contained in ground set");
  if (!(kappa > 0.0 && kappa <= 1.0)) throw MalformedInputError("kappa must lie in (0, 1]");

  const std::pair<Mask, std::uint64_t> key{base, kappa_key(kappa)};
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return *it->second;
  }
  auto solved = std::make_shared<const MarginalSolve>(solve_uncached(base, kappa));
  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, _] = memo_.emplace(key, std::move(solved));
  return *it->second;
}

double MarginalLpSolver::opt_value(Mask base, double kappa) const {
  if (kappa == 0.0 || base == 0) return 0.0;
  return solve(base, kappa).value;
}

MarginalSolve MarginalLpSolver::solve_uncached(Mask base, double kappa) const {
  const int size = subset_size(base);
  switch (options_.mode) {
    case LpMode::Enumerate:
      return solve_enumerate(base, kappa);
    case LpMode::ColumnGeneration:
      return solve_column_generation(base, kappa);
    case LpMode::Auto:
      break;
  }
  return size <= options_.enumerate_limit ? solve_enumerate(base, kappa)
                                          : solve_column_generation(base, kappa);
}

MarginalSolve MarginalLpSolver::solve_enumerate(Mask base, double kappa) const {
  const int size = subset_size(base);
  if (size > 16) throw CapacityError("subset-enumeration LP capped at base size 16");
  const auto elements = mask_elements(base);

  std::vector<Mask> columns;
  columns.reserve((std::size_t{1} << size) - 1);
  for_each_subset(base, [&](Mask sub) {
    if (sub != 0) columns.push_back(sub);
  });

  std::vector<double> objective(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) objective[j] = valuation_->value(columns[j]);

  std::vector<lp::Constraint> rows(elements.size() + 1);
  for (std::size_t i = 0; i < elements.size(); ++i) {
    rows[i].coeffs.assign(columns.size(), 0.0);
    rows[i].rhs = kappa;
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (contains(columns[j], elements[i])) rows[i].coeffs[j] = 1.0;
    }
  }
  auto& mass = rows.back();
  mass.coeffs.assign(columns.size(), 1.0);
  mass.rhs = 1.0;

  lp::Options lp_opt;
  lp_opt.max_iterations =
      std::max<long>(10000, options_.iteration_cap_base * (1L << std::min(size, 12)));
  const lp::Solution sol = lp::maximize(objective, rows, lp_opt);
  if (sol.status != lp::Status::Optimal) {
    throw SolverError("bounded-marginal LP did not converge", sol.objective,
                      valuation_->value(base));
  }
  return assemble(*valuation_, base, kappa, columns, sol, false, 0);
}

MarginalSolve MarginalLpSolver::solve_column_generation(Mask base, double kappa) const {
  const auto elements = mask_elements(base);
  const int size = static_cast<int>(elements.size());
  const long round_cap = options_.iteration_cap_base * (1L << std::min(size, 12));
  const double scale = std::max(1.0, valuation_->value(base));
  const double stop_tol = 1e-10 * scale;

  std::vector<Mask> columns;
  std::set<Mask> column_set;
  auto add_column = [&](Mask t) {
    if (t == 0 || column_set.count(t)) return false;
    columns.push_back(t);
    column_set.insert(t);
    return true;
  };
  add_column(base);
  for (int e : elements) add_column(Mask{1} << e);

  long rounds = 0;
  long lp_iterations = 0;
  std::uint64_t trace = 0;
  while (true) {
    std::vector<double> objective(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) objective[j] = valuation_->value(columns[j]);
    std::vector<lp::Constraint> rows(elements.size() + 1);
    for (std::size_t i = 0; i < elements.size(); ++i) {
      rows[i].coeffs.assign(columns.size(), 0.0);
      rows[i].rhs = kappa;
      for (std::size_t j = 0; j < columns.size(); ++j) {
        if (contains(columns[j], elements[i])) rows[i].coeffs[j] = 1.0;
      }
    }
    rows.back().coeffs.assign(columns.size(), 1.0);
    rows.back().rhs = 1.0;

    const lp::Solution sol = lp::maximize(objective, rows);
    if (sol.status != lp::Status::Optimal)
      throw SolverError("restricted master did not converge", 0.0, valuation_->value(base));
    lp_iterations += sol.iterations;
    trace ^= sol.trace_hash + 0x9e3779b97f4a7c15ull + (trace << 6) + (trace >> 2);

    std::vector<double> prices(valuation_->n(), 0.0);
    for (std::size_t i = 0; i < elements.size(); ++i)
      prices[elements[i]] = std::max(0.0, sol.duals[i]);
    const double mu = std::max(0.0, sol.duals[elements.size()]);

    const Mask priced = demand_set(*valuation_, prices, base);
    double priced_utility = valuation_->value(priced);
    for (int e : mask_elements(priced)) priced_utility -= prices[e];

    if (priced_utility <= mu + stop_tol || !add_column(priced)) {
      MarginalSolve out = assemble(*valuation_, base, kappa, columns, sol, true, lp_iterations);
      out.iterations += rounds;
      out.trace_hash = trace;
      return out;
    }
    if (++rounds > round_cap) {
      // Best bounds: master objective from below, dual bound from above.
      double price_total = 0.0;
      for (int e : elements) price_total += prices[e];
      throw SolverError("column generation hit its iteration cap", sol.objective,
                        kappa * price_total + std::max(mu, priced_utility));
    }
  }
}

KappaSearchResult MarginalLpSolver::find_kappa(Mask base, int ground_n) const {
  if (ground_n < 8) throw MalformedInputError("kappa search requires ground size >= 8");
  const std::vector<double> ladder = kappa_ladder(ground_n);

  KappaSearchResult result;
  result.levels = static_cast<int>(ladder.size());
  for (double z : ladder) {
    KappaSearchResult::Entry entry;
    entry.z = z;
    entry.value_at_z = opt_value(base, z);
    entry.value_at_z_squared = opt_value(base, z * z);
    result.table.push_back(entry);
    if (result.table.size() == 1 || entry.gap() > result.gap) {
      result.gap = entry.gap();
      result.kappa = z;
    }
  }
  return result;
}

MarginalSolve solve_bounded_marginal_lp(const Valuation& v, Mask base, double kappa,
                                        MarginalLpOptions options) {
  return MarginalLpSolver(v, options).solve(base, kappa);
}

double opt_lp_value(const Valuation& v, Mask base, double kappa, MarginalLpOptions options) {
  return MarginalLpSolver(v, options).opt_value(base, kappa);
}

KappaSearchResult find_kappa(const Valuation& v, Mask base, int ground_n,
                             MarginalLpOptions options) {
  return MarginalLpSolver(v, options).find_kappa(base, ground_n);
}

void dump_lp_debug(const MarginalSolve& solve, std::ostream& out) {
  out << "value " << solve.value << " kappa " << solve.primal.kappa << " base "
      << mask_to_string(solve.primal.base) << " trace " << solve.trace_hash << "\n";
  for (const auto& [mask, prob] : solve.primal.support) {
    out << "col " << mask_to_string(mask) << " x " << prob << "\n";
  }
  for (int e : mask_elements(solve.dual.base)) {
    out << "row " << e << " p " << solve.dual.prices[e] << "\n";
  }
  out << "row mass mu " << solve.dual.mu << "\n";
}

}  // namespace bfm
