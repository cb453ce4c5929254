#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bfm/generator.hpp"
#include "bfm/mechanism.hpp"

namespace bfm {

/// Batch driver configuration. Loaded from a JSON file; CLI flags override
/// individual fields. A fixed (config, seed) pair reproduces reports
/// byte-for-byte.
struct ExperimentConfig {
  std::string mode = "mechanism";  // mechanism | game | lp | checks
  std::uint64_t seed = 1;
  int trials = 100;
  double epsilon = 0.0;
  std::string out_path;        // empty = stdout
  std::string instance_path;   // takes precedence over the generator
  std::optional<GeneratorSpec> generator;
  double duality_tol = 1e-6;
  int game_grid_bits = 2;
  double game_gamma = 1.0;
  std::vector<double> lp_kappas;  // empty = the ladder for n (if n >= 8)
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);

Instance load_or_generate(const ExperimentConfig& config);

struct TrialRow {
  int trial = 0;
  std::uint64_t seed = 0;
  Branch branch = Branch::R;
  double value = 0.0;
  double opt = 0.0;
  double ratio = 0.0;
  std::int64_t payments_total_units = 0;
  bool budget_ok = true;
  bool ir_ok = true;
  bool npt_ok = true;
  bool gamma_event = false;
};

struct Report {
  std::vector<TrialRow> rows;
  double opt = 0.0;
  double mean_value = 0.0;
  double mean_ratio = 0.0;
  long budget_violations = 0;
  long ir_violations = 0;
  long npt_violations = 0;
  long truthfulness_violations = 0;
  double gamma_frequency = 0.0;
  bool ok = true;
  std::string violation_dump;  // JSON of the first offending outcome

  std::string csv() const;
};

/// Runs `trials` mechanism trials with truthful reports and exact per-trial
/// violation counters. Truthfulness is certified per trial by replaying each
/// winner at its payment (must still win) and one grid step above it (must
/// lose), which pins the payment as the exact winning threshold.
Report run_experiment(const ExperimentConfig& config);

/// Monte-Carlo frequency of the random-partition event: both halves keep a
/// constant fraction of the optimum
/// (V2* >= OPT/2 and V2* >= V1* >= (OPT - best singleton)/4).
double check_partition_lemma(const Instance& instance, int trials, std::uint64_t seed = 1);

/// Fast per-instance invariant battery (mode "checks"); prints one line per
/// check and returns the number of failures.
int run_checks(const ExperimentConfig& config, const Instance& instance, std::ostream& out);

/// Zero-sum game report: CSV row `k,t,min_payoff,argmin_c` plus the strategy
/// dump.
std::string game_report(const ExperimentConfig& config, const Instance& instance);

/// Solves the bounded-marginal LP at the configured kappas over the full
/// ground set and emits the per-column/per-row audit dump.
std::string lp_report(const ExperimentConfig& config, const Instance& instance);

/// Locale-independent shortest-round-trip formatting used by every report.
std::string format_double(double value);

}  // namespace bfm
