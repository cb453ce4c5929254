#include "bfm/experiment.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "bfm/errors.hpp"
#include "bfm/instance_io.hpp"
#include "json.hpp"

namespace bfm {

namespace {
using nlohmann::json;

GeneratorSpec generator_from_json(const json& j) {
  GeneratorSpec spec;
  if (j.contains("family")) spec.family = j.at("family").get<std::string>();
  if (j.contains("n")) spec.n = j.at("n").get<int>();
  if (j.contains("bits")) spec.bits = j.at("bits").get<int>();
  if (j.contains("budget")) spec.budget = j.at("budget").get<double>();
  if (j.contains("clauses")) spec.clauses = j.at("clauses").get<int>();
  if (j.contains("points")) spec.points = j.at("points").get<int>();
  if (j.contains("max_weight")) spec.max_weight = j.at("max_weight").get<int>();
  if (j.contains("cost_model")) spec.cost_model = j.at("cost_model").get<std::string>();
  if (j.contains("epsilon")) spec.epsilon = j.at("epsilon").get<double>();
  return spec;
}
}  // namespace

std::string format_double(double value) {
  std::array<char, 32> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw MalformedInputError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig config;
  if (j.contains("mode")) config.mode = j.at("mode").get<std::string>();
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("trials")) config.trials = j.at("trials").get<int>();
  if (j.contains("epsilon")) config.epsilon = j.at("epsilon").get<double>();
  if (j.contains("out")) config.out_path = j.at("out").get<std::string>();
  if (j.contains("instance")) config.instance_path = j.at("instance").get<std::string>();
  if (j.contains("generator")) config.generator = generator_from_json(j.at("generator"));
  if (j.contains("tolerances") && j.at("tolerances").contains("duality"))
    config.duality_tol = j.at("tolerances").at("duality").get<double>();
  if (j.contains("game")) {
    const json& g = j.at("game");
    if (g.contains("grid_bits")) config.game_grid_bits = g.at("grid_bits").get<int>();
    if (g.contains("gamma")) config.game_gamma = g.at("gamma").get<double>();
  }
  if (j.contains("lp") && j.at("lp").contains("kappas"))
    config.lp_kappas = j.at("lp").at("kappas").get<std::vector<double>>();
  if (config.trials < 1) throw MalformedInputError("trial count must be at least 1");
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInputError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return config_from_json_text(buffer.str());
}

Instance load_or_generate(const ExperimentConfig& config) {
  if (!config.instance_path.empty()) {
    Instance inst = load_instance(config.instance_path);
    inst.epsilon = config.epsilon;
    return inst;
  }
  GeneratorSpec spec = config.generator.value_or(GeneratorSpec{});
  spec.epsilon = config.epsilon;
  return generate_instance(spec, config.seed);
}

namespace {

struct PartitionStats {
  double v1_star = 0.0;
  double v2_star = 0.0;
};

// Exact per-partition optima, cached per group-one mask.
class GammaOracle {
 public:
  GammaOracle(const Instance& instance, Mask active)
      : instance_(&instance), active_(active), costs_(instance.true_costs()) {
    opt_ = opt_knapsack(instance.valuation, costs_, instance.budget(), active_).value;
    double best = 0.0;
    for (int e : mask_elements(active_)) best = std::max(best, instance.valuation.value(Mask{1} << e));
    best_singleton_ = best;
  }

  double opt() const { return opt_; }

  bool gamma_event(Mask u1) {
    auto it = cache_.find(u1);
    if (it == cache_.end()) {
      PartitionStats stats;
      stats.v1_star = opt_knapsack(instance_->valuation, costs_, instance_->budget(), u1).value;
      stats.v2_star =
          opt_knapsack(instance_->valuation, costs_, instance_->budget(), active_ & ~u1).value;
      it = cache_.emplace(u1, stats).first;
    }
    const PartitionStats& s = it->second;
    return s.v2_star >= opt_ / 2.0 && s.v2_star >= s.v1_star &&
           s.v1_star >= (opt_ - best_singleton_) / 4.0;
  }

 private:
  const Instance* instance_;
  Mask active_;
  CostVector costs_;
  double opt_ = 0.0;
  double best_singleton_ = 0.0;
  std::map<Mask, PartitionStats> cache_;
};

Mask active_mask(const Instance& instance, const std::vector<std::int64_t>& units) {
  Mask active = 0;
  for (int e = 0; e < instance.n(); ++e) {
    if (units[e] <= instance.grid.budget_units()) active |= Mask{1} << e;
  }
  return active;
}

}  // namespace

Report run_experiment(const ExperimentConfig& config) {
  const Instance instance = load_or_generate(config);
  MechanismContext ctx(instance);
  const std::vector<std::int64_t>& reported = instance.true_cost_units;  // truthful reports
  const Mask active = active_mask(instance, reported);
  GammaOracle gamma(instance, active);

  Report report;
  report.opt = gamma.opt();
  DerivedStream trial_seeds(config.seed, 3);

  double value_sum = 0.0;
  double ratio_sum = 0.0;
  long gamma_count = 0;
  for (int t = 0; t < config.trials; ++t) {
    const RandomTape tape(trial_seeds.bits(static_cast<std::uint64_t>(t)));
    const MechanismOutcome outcome = run_mechanism(instance, reported, tape, &ctx);

    TrialRow row;
    row.trial = t;
    row.seed = tape.seed();
    row.branch = outcome.branch;
    row.value = outcome.value;
    row.opt = report.opt;
    row.ratio = report.opt > 0.0 ? outcome.value / report.opt : 1.0;
    row.payments_total_units = outcome.total_payment_units();

    row.budget_ok = row.payments_total_units <= instance.grid.budget_units();
    row.ir_ok = true;
    row.npt_ok = true;
    for (int e = 0; e < instance.n(); ++e) {
      const bool winner = contains(outcome.winners, e);
      if (winner && outcome.payment_units[e] < reported[e]) row.ir_ok = false;
      if (!winner && outcome.payment_units[e] != 0) row.npt_ok = false;
      if (outcome.payment_units[e] < 0) row.ir_ok = false;
    }

    // Threshold certificate: each winner's payment is the exact largest
    // winning report on this tape.
    for (int e : mask_elements(outcome.winners)) {
      std::vector<std::int64_t> probe = reported;
      probe[e] = outcome.payment_units[e];
      const MechanismOutcome at_payment = run_mechanism(instance, probe, tape, &ctx);
      bool certified = contains(at_payment.winners, e);
      probe[e] = outcome.payment_units[e] + 1;
      const MechanismOutcome above = run_mechanism(instance, probe, tape, &ctx);
      certified = certified && !contains(above.winners, e);
      if (!certified) {
        ++report.truthfulness_violations;
        if (report.violation_dump.empty()) report.violation_dump = outcome_to_json(outcome);
      }
    }
    if (instance.n() >= 8) {
      row.gamma_event = gamma.gamma_event(outcome.trace.u1);
    } else {
      const auto [u1, _] = partition(active, tape);
      row.gamma_event = gamma.gamma_event(u1);
    }

    if (!row.budget_ok) ++report.budget_violations;
    if (!row.ir_ok) ++report.ir_violations;
    if (!row.npt_ok) ++report.npt_violations;
    if ((!row.budget_ok || !row.ir_ok || !row.npt_ok) && report.violation_dump.empty()) {
      report.violation_dump = outcome_to_json(outcome);
    }
    value_sum += row.value;
    ratio_sum += row.ratio;
    gamma_count += row.gamma_event ? 1 : 0;
    report.rows.push_back(row);
  }

  report.mean_value = value_sum / config.trials;
  report.mean_ratio = ratio_sum / config.trials;
  report.gamma_frequency = static_cast<double>(gamma_count) / config.trials;
  report.ok = report.budget_violations == 0 && report.ir_violations == 0 &&
              report.npt_violations == 0 && report.truthfulness_violations == 0;
  return report;
}

std::string Report::csv() const {
  std::string out = "# schema report.v1\n";
  out += "trial,seed,branch,value,opt,ratio,payments_total,budget_ok,ir_ok,gamma_event\n";
  for (const TrialRow& row : rows) {
    out += std::to_string(row.trial);
    out += ",";
    out += std::to_string(row.seed);
    out += ",";
    out += branch_name(row.branch);
    out += ",";
    out += format_double(row.value);
    out += ",";
    out += format_double(row.opt);
    out += ",";
    out += format_double(row.ratio);
    out += ",";
    out += std::to_string(row.payments_total_units);
    out += ",";
    out += row.budget_ok ? "1" : "0";
    out += ",";
    out += row.ir_ok ? "1" : "0";
    out += ",";
    out += row.gamma_event ? "1" : "0";
    out += "\n";
  }
  out += "# aggregate mean_value=" + format_double(mean_value) + " opt=" + format_double(opt) +
         " mean_ratio=" + format_double(mean_ratio) +
         " budget_violations=" + std::to_string(budget_violations) +
         " ir_violations=" + std::to_string(ir_violations) +
         " npt_violations=" + std::to_string(npt_violations) +
         " truthfulness_violations=" + std::to_string(truthfulness_violations) +
         " gamma_frequency=" + format_double(gamma_frequency) + "\n";
  return out;
}

double check_partition_lemma(const Instance& instance, int trials, std::uint64_t seed) {
  if (trials < 1) throw MalformedInputError("trial count must be at least 1");
  const Mask active = active_mask(instance, instance.true_cost_units);
  GammaOracle gamma(instance, active);
  DerivedStream tape_seeds(seed, 3);
  long hits = 0;
  for (int t = 0; t < trials; ++t) {
    const RandomTape tape(tape_seeds.bits(static_cast<std::uint64_t>(t)));
    const auto [u1, _] = partition(active, tape);
    if (gamma.gamma_event(u1)) ++hits;
  }
  return static_cast<double>(hits) / trials;
}

std::string game_report(const ExperimentConfig& config, const Instance& instance) {
  const GameInstance game = GameInstance::uniform_grid(
      instance.valuation, instance.grid, config.game_gamma, config.game_grid_bits);
  const PayoffMatrix matrix = build_payoff_matrix(game);
  const GameSolution sol = solve_matrix_game(matrix);

  // Adversary rows are restricted to c with c(U) <= gamma * budget.
  const std::int64_t rival_limit = static_cast<std::int64_t>(
      config.game_gamma * static_cast<double>(instance.grid.budget_units()) + kGridSnapTol);
  double min_payoff = std::numeric_limits<double>::infinity();
  std::size_t argmin = 0;
  for (std::size_t c = 0; c < matrix.k; ++c) {
    std::int64_t total = 0;
    for (std::int64_t u : game.strategies[c]) total += u;
    if (total > rival_limit) continue;
    double sum = 0.0;
    for (std::size_t d = 0; d < matrix.k; ++d) sum += matrix.at(c, d) * sol.strategy.probs[d];
    if (sum < min_payoff) {
      min_payoff = sum;
      argmin = c;
    }
  }

  std::string out = "k,t,min_payoff,argmin_c\n";
  out += std::to_string(matrix.k) + "," + format_double(sol.value) + "," +
         format_double(min_payoff * matrix.value_total) + ",";
  for (std::size_t e = 0; e < game.strategies[argmin].size(); ++e) {
    if (e) out += "|";
    out += std::to_string(game.strategies[argmin][e]);
  }
  out += "\n";
  for (std::size_t d = 0; d < matrix.k; ++d) {
    if (sol.strategy.probs[d] <= 1e-12) continue;
    out += format_double(sol.strategy.probs[d]);
    out += "; ";
    for (std::size_t e = 0; e < game.strategies[d].size(); ++e) {
      if (e) out += ",";
      out += std::to_string(game.strategies[d][e]);
    }
    out += "\n";
  }
  return out;
}

std::string lp_report(const ExperimentConfig& config, const Instance& instance) {
  std::vector<double> kappas = config.lp_kappas;
  if (kappas.empty()) {
    if (instance.n() >= 8) {
      kappas = kappa_ladder(instance.n());
    } else {
      kappas = {0.25, 0.0625};
    }
  }
  MarginalLpSolver solver(instance.valuation);
  const Mask base = full_mask(instance.n());
  std::ostringstream out;
  for (double kappa : kappas) {
    const MarginalSolve& solved = solver.solve(base, kappa);
    dump_lp_debug(solved, out);
    const double dual_value = solved.dual.objective(kappa);
    out << "duality_gap " << format_double(std::abs(solved.value - dual_value)) << "\n";
  }
  return out.str();
}

int run_checks(const ExperimentConfig& config, const Instance& instance, std::ostream& out) {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok) {
    out << (ok ? "[ok]   " : "[FAIL] ") << name << "\n";
    if (!ok) ++failures;
  };

  const Valuation& v = instance.valuation;
  const Mask all = full_mask(instance.n());

  check("structure", check_structure(v).all_ok());

  {
    std::vector<double> prices(instance.n(), 0.0);
    SequentialRng rng(config.seed, 23);
    for (int e = 0; e < instance.n(); ++e)
      prices[e] = static_cast<double>(rng.next_range(0, 8)) / 2.0;
    const Mask a = demand_set(v, prices, all);
    const Mask b = demand_set(v, prices, all);
    bool optimal = true;
    const double got = v.value(a) - [&] {
      double p = 0.0;
      for (int e : mask_elements(a)) p += prices[e];
      return p;
    }();
    for_each_subset(all, [&](Mask sub) {
      double p = 0.0;
      for (int e : mask_elements(sub)) p += prices[e];
      if (v.value(sub) - p > got + 1e-9) optimal = false;
    });
    check("demand determinism", a == b);
    check("demand optimality", optimal);
  }

  {
    MarginalLpSolver solver(v);
    bool duality = true;
    bool marginals = true;
    for (double kappa : {1.0, 0.25, 0.0625}) {
      const MarginalSolve& solved = solver.solve(all, kappa);
      const double scale = std::max(1.0, v.value(all));
      if (std::abs(solved.value - solved.dual.objective(kappa)) > config.duality_tol * scale)
        duality = false;
      for (int e : mask_elements(all)) {
        if (solved.primal.marginal(e) > kappa + 1e-9) marginals = false;
      }
    }
    check("lp strong duality", duality);
    check("lp marginal feasibility", marginals);
  }

  if (instance.n() >= 8) {
    MarginalLpSolver solver(v);
    const KappaSearchResult search = solver.find_kappa(all, instance.n());
    const double bound = v.value(all) / (8.0 * search.levels);
    check("kappa ladder gap", search.gap >= bound - 1e-6 * std::max(1.0, v.value(all)));

    const ThresholdDistribution dist = build_distribution(solver, all, instance.budget(), instance.n());
    bool budgets = true;
    for (const auto& [vec, prob] : dist.support) {
      if (vec.total() > instance.budget() * (1.0 + 1e-9)) budgets = false;
    }
    check("threshold budgets", budgets);
  }

  {
    const int game_n = std::min(instance.n(), 3);
    std::vector<double> weights(v.weights().begin(),
                                v.weights().begin() + std::min<std::size_t>(v.weights().size(), 3));
    // Fall back to singleton values when the valuation has no weight vector.
    if (weights.empty()) {
      for (int e = 0; e < game_n; ++e) weights.push_back(std::max(1.0, v.value(Mask{1} << e)));
    }
    const Valuation small = Valuation::additive(weights);
    const GameInstance game =
        GameInstance::uniform_grid(small, instance.grid, 1.0, std::min(config.game_grid_bits, 3));
    const PayoffMatrix matrix = build_payoff_matrix(game);
    const GameSolution sol = solve_matrix_game(matrix);
    check("game symmetric dominance", matrix.min_symmetric_slack >= -1e-9);
    check("game value bound", sol.value >= 0.5 - 1e-9);
  }

  {
    const double freq = check_partition_lemma(instance, 2000, config.seed);
    const double sigma = std::sqrt(0.25 * 0.75 / 2000.0);
    check("partition event frequency", freq >= 0.25 - 3.0 * sigma);
  }

  {
    MechanismContext ctx(instance);
    DerivedStream tapes(config.seed, 3);
    bool hard_ok = true;
    for (int t = 0; t < std::min(config.trials, 200); ++t) {
      const RandomTape tape(tapes.bits(static_cast<std::uint64_t>(t)));
      const MechanismOutcome outcome = run_mechanism(instance, instance.true_cost_units, tape, &ctx);
      if (outcome.total_payment_units() > instance.grid.budget_units()) hard_ok = false;
      for (int e = 0; e < instance.n(); ++e) {
        const bool winner = contains(outcome.winners, e);
        if (winner && outcome.payment_units[e] < instance.true_cost_units[e]) hard_ok = false;
        if (!winner && outcome.payment_units[e] != 0) hard_ok = false;
      }
    }
    check("mechanism hard guarantees", hard_ok);
  }

  return failures;
}

}  // namespace bfm
