// Experiment driver: runs mechanism batches, game and LP reports, and the
// per-instance invariant battery from a JSON config plus flag overrides.
// Exit status is 0 iff every asserted invariant held.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bfm/experiment.hpp"
#include "bfm/instance_io.hpp"

namespace {

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw bfm::MalformedInputError("cannot write output file: " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"budget-feasible procurement mechanism experiments"};

  std::string config_path;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<double> epsilon;
  std::optional<std::string> out_path;
  std::optional<std::string> instance_path;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--mode", mode, "mechanism | game | lp | checks");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--trials", trials, "trial count");
  app.add_option("--epsilon", epsilon, "value-estimate slack parameter");
  app.add_option("--out", out_path, "output path (default stdout)");
  app.add_option("--instance", instance_path, "instance JSON file");

  CLI11_PARSE(app, argc, argv);

  try {
    bfm::ExperimentConfig config;
    if (!config_path.empty()) config = bfm::load_config(config_path);
    if (mode) config.mode = *mode;
    if (seed) config.seed = *seed;
    if (trials) config.trials = *trials;
    if (epsilon) config.epsilon = *epsilon;
    if (out_path) config.out_path = *out_path;
    if (instance_path) config.instance_path = *instance_path;

    if (config.mode == "mechanism") {
      const bfm::Report report = bfm::run_experiment(config);
      write_output(config.out_path, report.csv());
      if (!report.ok) {
        std::cerr << "invariant violation; offending trace:\n" << report.violation_dump << "\n";
        return 1;
      }
      return 0;
    }
    if (config.mode == "game") {
      const bfm::Instance instance = bfm::load_or_generate(config);
      write_output(config.out_path, bfm::game_report(config, instance));
      return 0;
    }
    if (config.mode == "lp") {
      const bfm::Instance instance = bfm::load_or_generate(config);
      write_output(config.out_path, bfm::lp_report(config, instance));
      return 0;
    }
    if (config.mode == "checks") {
      const bfm::Instance instance = bfm::load_or_generate(config);
      const int failures = bfm::run_checks(config, instance, std::cout);
      return failures == 0 ? 0 : 1;
    }
    std::cerr << "unknown mode: " << config.mode << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
