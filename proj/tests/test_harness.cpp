#include "bfm/experiment.hpp"

#include <cmath>
#include <sstream>

#include "bfm/errors.hpp"
#include "bfm/generator.hpp"
#include "bfm/instance_io.hpp"
#include "doctest.h"

using namespace bfm;

TEST_CASE("generated instances pass the structure checker") {
  SequentialRng rng(3, 50);
  for (const char* family : {"additive", "xos", "coverage", "explicit"}) {
    for (int round = 0; round < 4; ++round) {
      GeneratorSpec spec;
      spec.family = family;
      spec.n = 4 + static_cast<int>(rng.next_below(5));
      spec.cost_model = round % 2 ? "correlated" : "uniform";
      const Instance inst = generate_instance(spec, rng.next_bits());
      CHECK(inst.n() == spec.n);
      CHECK(check_structure(inst.valuation).all_ok());
      for (std::int64_t u : inst.true_cost_units) {
        CHECK(u >= 0);
        CHECK(u <= inst.grid.budget_units());
      }
    }
  }
}

TEST_CASE("generation is deterministic in the seed") {
  GeneratorSpec spec;
  spec.family = "explicit";
  spec.n = 6;
  const Instance a = generate_instance(spec, 42);
  const Instance b = generate_instance(spec, 42);
  CHECK(instance_to_json(a) == instance_to_json(b));
  const Instance c = generate_instance(spec, 43);
  CHECK(instance_to_json(a) != instance_to_json(c));
}

TEST_CASE("generator rejects unknown families and bad parameters") {
  GeneratorSpec spec;
  spec.family = "unknown";
  CHECK_THROWS_AS(generate_instance(spec, 1), MalformedInputError);
  spec.family = "additive";
  spec.cost_model = "nope";
  CHECK_THROWS_AS(generate_instance(spec, 1), MalformedInputError);
  spec.cost_model = "uniform";
  spec.n = 0;
  CHECK_THROWS_AS(generate_instance(spec, 1), MalformedInputError);
}

TEST_CASE("experiment reports are byte-identical under a fixed config") {
  ExperimentConfig config;
  config.seed = 11;
  config.trials = 60;
  GeneratorSpec gen;
  gen.family = "xos";
  gen.n = 8;
  gen.bits = 4;
  config.generator = gen;

  const Report a = run_experiment(config);
  const Report b = run_experiment(config);
  CHECK(a.csv() == b.csv());
  CHECK(a.ok);
  CHECK(a.budget_violations == 0);
  CHECK(a.ir_violations == 0);
  CHECK(a.npt_violations == 0);
  CHECK(a.rows.size() == 60);

  ExperimentConfig other = config;
  other.seed = 12;
  CHECK(run_experiment(other).csv() != a.csv());
}

TEST_CASE("experiment mean value clears the guarantee with slack") {
  ExperimentConfig config;
  config.seed = 5;
  config.trials = 1000;
  GeneratorSpec gen;
  gen.family = "additive";
  gen.n = 8;
  gen.bits = 5;
  config.generator = gen;
  const Report report = run_experiment(config);
  REQUIRE(report.ok);
  const double levels = std::ceil(std::log2(std::log2(8.0)));
  const double bound = report.opt / (2880.0 * levels);
  CHECK(report.mean_value >= bound);
}

TEST_CASE("config parsing and overrides") {
  const std::string text = R"({
    "mode": "mechanism",
    "seed": 9,
    "trials": 25,
    "epsilon": 0.5,
    "generator": {"family": "coverage", "n": 9, "bits": 5, "cost_model": "correlated"},
    "tolerances": {"duality": 1e-7},
    "game": {"grid_bits": 3, "gamma": 0.5},
    "lp": {"kappas": [0.25, 0.0625]}
  })";
  const ExperimentConfig config = config_from_json_text(text);
  CHECK(config.seed == 9);
  CHECK(config.trials == 25);
  CHECK(config.epsilon == 0.5);
  REQUIRE(config.generator.has_value());
  CHECK(config.generator->family == "coverage");
  CHECK(config.duality_tol == 1e-7);
  CHECK(config.game_grid_bits == 3);
  CHECK(config.game_gamma == 0.5);
  REQUIRE(config.lp_kappas.size() == 2);
  CHECK_THROWS_AS(config_from_json_text("{\"trials\": 0}"), MalformedInputError);
  CHECK_THROWS_AS(config_from_json_text("not json"), MalformedInputError);
}

TEST_CASE("partition event frequency") {
  SequentialRng rng(17, 51);
  for (int round = 0; round < 4; ++round) {
    GeneratorSpec spec;
    spec.family = round % 2 ? "xos" : "coverage";
    spec.n = 8;
    spec.bits = 5;
    const Instance inst = generate_instance(spec, rng.next_bits());
    const double freq = check_partition_lemma(inst, 4000, 7);
    const double sigma = std::sqrt(0.25 * 0.75 / 4000.0);
    CHECK(freq >= 0.25 - 3.0 * sigma);
  }
}

TEST_CASE("partition event on a single element is exact") {
  // n = 1: the only element is worth w at cost <= B. The partition puts it
  // in either group with probability 1/2. OPT = w and the best singleton is
  // w, so the event needs V2* >= w/2 and V2* >= V1* >= 0: exactly the tapes
  // that send the element to group two, frequency 1/2.
  Instance inst;
  inst.valuation = Valuation::additive({4.0});
  inst.grid = CostGrid{1.0, 3};
  inst.true_cost_units = {3};
  const double freq = check_partition_lemma(inst, 20000, 3);
  CHECK(freq == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("partition event degenerates gracefully at zero value") {
  Instance inst;
  inst.valuation = Valuation::additive(std::vector<double>(4, 0.0));
  inst.grid = CostGrid{1.0, 3};
  inst.true_cost_units = {1, 2, 3, 4};
  // Everything is zero, so the event holds with probability one.
  CHECK(check_partition_lemma(inst, 500, 3) == 1.0);
}

TEST_CASE("game and lp reports are well-formed and deterministic") {
  ExperimentConfig config;
  config.seed = 21;
  GeneratorSpec gen;
  gen.family = "additive";
  gen.n = 2;
  gen.bits = 4;
  config.generator = gen;
  config.game_grid_bits = 2;
  const Instance inst = load_or_generate(config);

  const std::string game_a = game_report(config, inst);
  const std::string game_b = game_report(config, inst);
  CHECK(game_a == game_b);
  CHECK(game_a.find("k,t,min_payoff,argmin_c") == 0);

  config.lp_kappas = {0.25};
  const std::string lp_a = lp_report(config, inst);
  CHECK(lp_a == lp_report(config, inst));
  CHECK(lp_a.find("value ") == 0);
  CHECK(lp_a.find("duality_gap") != std::string::npos);
}

TEST_CASE("checks mode passes on healthy instances") {
  ExperimentConfig config;
  config.seed = 31;
  config.trials = 50;
  GeneratorSpec gen;
  gen.family = "xos";
  gen.n = 8;
  gen.bits = 4;
  config.generator = gen;
  const Instance inst = load_or_generate(config);
  std::ostringstream out;
  CHECK(run_checks(config, inst, out) == 0);
  CHECK(out.str().find("[FAIL]") == std::string::npos);
}

TEST_CASE("experiments can load instances from files") {
  GeneratorSpec spec;
  spec.family = "coverage";
  spec.n = 8;
  spec.bits = 5;
  const Instance inst = generate_instance(spec, 404);
  const std::string path = "/tmp/bfm_instance_roundtrip.json";
  save_instance(inst, path);

  ExperimentConfig config;
  config.instance_path = path;
  config.seed = 8;
  config.trials = 40;
  const Report report = run_experiment(config);
  CHECK(report.ok);
  CHECK(report.rows.size() == 40);
  const Instance loaded = load_or_generate(config);
  CHECK(loaded.true_cost_units == inst.true_cost_units);
}
