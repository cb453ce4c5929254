#include "bfm/marginal_lp.hpp"

#include <cmath>
#include <vector>

#include "bfm/errors.hpp"
#include "bfm/generator.hpp"
#include "bfm/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bfm;

namespace {

Instance sample_instance(SequentialRng& rng, int n, int round) {
  GeneratorSpec spec;
  spec.family = round % 4 == 0   ? "additive"
                : round % 4 == 1 ? "xos"
                : round % 4 == 2 ? "coverage"
                                 : "explicit";
  spec.n = n;
  return generate_instance(spec, rng.next_bits());
}

void check_certificates(const MarginalLpSolver& solver, const MarginalSolve& solved,
                        double kappa) {
  const Valuation& v = solver.valuation();
  const Mask base = solved.primal.base;
  const double scale = std::max(1.0, v.value(base));

  // Strong duality.
  CHECK(std::abs(solved.value - solved.dual.objective(kappa)) <= 1e-6 * scale);

  // Dual feasibility, witnessed by one canonical demand query.
  const Mask witness = demand_set(v, solved.dual.prices, base);
  double utility = v.value(witness);
  for (int e : mask_elements(witness)) utility -= solved.dual.prices[e];
  CHECK(utility <= solved.dual.mu + 1e-9 * scale);

  // Primal feasibility: per-element marginals and total mass.
  for (int e : mask_elements(base)) {
    CHECK(solved.primal.marginal(e) <= kappa + 1e-9);
  }
  CHECK(solved.primal.mass() <= 1.0 + 1e-9);

  // Basic solutions keep small support.
  CHECK(static_cast<int>(solved.primal.support.size()) <= subset_size(base) + 2);

  // The reported value is the support's expected value.
  CHECK(solved.primal.expected_value(v) == doctest::Approx(solved.value).epsilon(1e-9));
}

}  // namespace

TEST_CASE("kappa = 1 keeps the whole base") {
  SequentialRng rng(5, 10);
  for (int round = 0; round < 8; ++round) {
    const Instance inst = sample_instance(rng, 6, round);
    MarginalLpSolver solver(inst.valuation);
    const Mask base = full_mask(6);
    CHECK(solver.opt_value(base, 1.0) ==
          doctest::Approx(inst.valuation.value(base)).epsilon(1e-9));
  }
}

TEST_CASE("additive closed form: value kappa * v(S), dual prices the weights") {
  const std::vector<double> weights{3, 1, 2, 5};
  const Valuation v = Valuation::additive(weights);
  MarginalLpSolver solver(v);
  for (double kappa : {0.5, 0.25, 0.0625}) {
    const MarginalSolve& solved = solver.solve(0b1111, kappa);
    CHECK(solved.value == doctest::Approx(kappa * 11.0).epsilon(1e-9));
    for (int e = 0; e < 4; ++e) CHECK(solved.dual.prices[e] == doctest::Approx(weights[e]).epsilon(1e-7));
    CHECK(solved.dual.mu == doctest::Approx(0.0).epsilon(1e-9));
    check_certificates(solver, solved, kappa);
  }
}

TEST_CASE("value matches vertex enumeration on tiny bases") {
  SequentialRng rng(21, 11);
  for (int round = 0; round < 12; ++round) {
    const Instance inst = sample_instance(rng, 4, round);
    MarginalLpSolver solver(inst.valuation);
    for (double kappa : {1.0, 0.5, 0.25, 0.0625}) {
      const double mine = solver.opt_value(0b1111, kappa);
      const double reference = test::marginal_lp_value_by_dual(inst.valuation, 0b1111, kappa);
      CHECK(mine == doctest::Approx(reference).epsilon(1e-7));
    }
  }
}

TEST_CASE("tiny kappa is bounded by the flat dual") {
  SequentialRng rng(31, 12);
  for (int round = 0; round < 8; ++round) {
    const int n = 8;
    const Instance inst = sample_instance(rng, n, round);
    MarginalLpSolver solver(inst.valuation);
    const Mask base = full_mask(n);
    const double kappa = 1.0 / (n * n);
    CHECK(solver.opt_value(base, kappa) <= inst.valuation.value(base) / n + 1e-9);
  }
}

TEST_CASE("opt value conventions and monotonicity in kappa") {
  SequentialRng rng(41, 13);
  const Instance inst = sample_instance(rng, 6, 1);
  MarginalLpSolver solver(inst.valuation);
  CHECK(solver.opt_value(0b111111, 0.0) == 0.0);
  CHECK(solver.opt_value(0, 0.5) == 0.0);
  double previous = 0.0;
  for (double kappa : {0.00390625, 0.0625, 0.25, 0.5, 1.0}) {
    const double value = solver.opt_value(0b111111, kappa);
    CHECK(value >= previous - 1e-9);
    previous = value;
  }
}

TEST_CASE("ladder shape") {
  CHECK(kappa_levels(8) == 2);
  CHECK(kappa_levels(16) == 2);
  CHECK(kappa_levels(17) == 3);
  CHECK(kappa_levels(32) == 3);
  const std::vector<double> z8 = kappa_ladder(8);
  REQUIRE(z8.size() == 2);
  CHECK(z8[0] == 0.25);
  CHECK(z8[1] == 0.0625);
  CHECK_THROWS_AS(kappa_levels(7), MalformedInputError);
}

TEST_CASE("kappa search on an additive valuation has the closed-form gap") {
  // For additive v the LP value is z * v(S), so the gap is (z - z^2) v(S),
  // maximal on the ladder at z = 1/4.
  const Valuation v = Valuation::additive(std::vector<double>(16, 2.0));
  MarginalLpSolver solver(v);
  const Mask base = full_mask(16);
  const KappaSearchResult result = solver.find_kappa(base, 16);
  CHECK(result.levels == 2);
  CHECK(result.kappa == 0.25);
  const double total = v.value(base);
  CHECK(result.gap == doctest::Approx((0.25 - 0.0625) * total).epsilon(1e-9));
  CHECK(result.gap >= total / 16.0 - 1e-9);
  for (const auto& entry : result.table) CHECK(result.gap >= entry.gap() - 1e-12);
}

TEST_CASE("kappa search guarantee and telescoping identity") {
  SequentialRng rng(51, 14);
  for (int round = 0; round < 6; ++round) {
    const int n = 8;
    const Instance inst = sample_instance(rng, n, round);
    const Valuation& v = inst.valuation;
    MarginalLpSolver solver(v);
    const Mask base = full_mask(n);
    const KappaSearchResult result = solver.find_kappa(base, n);
    const double total = v.value(base);

    CHECK(result.gap >= total / (8.0 * result.levels) - 1e-6 * std::max(1.0, total));

    double telescoped = 0.0;
    for (const auto& entry : result.table) telescoped += entry.gap();
    const double last_sq = result.table.back().value_at_z_squared;
    CHECK(telescoped ==
          doctest::Approx(solver.opt_value(base, 0.25) - last_sq).epsilon(1e-9));

    // Endpoints of the telescoping chain.
    CHECK(solver.opt_value(base, 0.25) >= total / 4.0 - 1e-9 * std::max(1.0, total));
    CHECK(last_sq <= total / n + 1e-9 * std::max(1.0, total));
  }
}

TEST_CASE("composing optimal distributions squares the marginals") {
  SequentialRng rng(61, 15);
  for (int round = 0; round < 5; ++round) {
    const Instance inst = sample_instance(rng, 7, round);
    const Valuation& v = inst.valuation;
    MarginalLpSolver solver(v);
    const Mask base = full_mask(7);
    const double kappa = 0.25;
    const MarginalSolve& outer = solver.solve(base, kappa);
    for (int e : mask_elements(base)) {
      double composed = 0.0;
      for (const auto& [subset, prob] : outer.primal.support) {
        if (!contains(subset, e)) continue;
        composed += prob * solver.solve(subset, kappa).primal.marginal(e);
      }
      CHECK(composed <= kappa * kappa + 1e-9);
    }
    // And the composed expected value is bounded by the squared-kappa value.
    double composed_value = 0.0;
    for (const auto& [subset, prob] : outer.primal.support) {
      composed_value += prob * solver.solve(subset, kappa).value;
    }
    CHECK(composed_value <= solver.opt_value(base, kappa * kappa) + 1e-6);
  }
}

TEST_CASE("enumeration and column generation agree") {
  SequentialRng rng(71, 16);
  for (int round = 0; round < 10; ++round) {
    const Instance inst = sample_instance(rng, 8, round);
    MarginalLpOptions enumerate;
    enumerate.mode = LpMode::Enumerate;
    MarginalLpOptions generate;
    generate.mode = LpMode::ColumnGeneration;
    MarginalLpSolver a(inst.valuation, enumerate);
    MarginalLpSolver b(inst.valuation, generate);
    const Mask base = full_mask(8);
    for (double kappa : {1.0, 0.25, 0.0625}) {
      const MarginalSolve& ea = a.solve(base, kappa);
      const MarginalSolve& cb = b.solve(base, kappa);
      CHECK(ea.value == doctest::Approx(cb.value).epsilon(1e-7));
      CHECK_FALSE(ea.used_column_generation);
      CHECK(cb.used_column_generation);
      check_certificates(a, ea, kappa);
      check_certificates(b, cb, kappa);
    }
  }
}

TEST_CASE("solves are canonical: identical reruns, identical trace hashes") {
  SequentialRng rng(81, 17);
  const Instance inst = sample_instance(rng, 8, 1);
  MarginalLpSolver fresh_a(inst.valuation);
  MarginalLpSolver fresh_b(inst.valuation);
  const MarginalSolve& a = fresh_a.solve(0b10111011, 0.25);
  const MarginalSolve& b = fresh_b.solve(0b10111011, 0.25);
  CHECK(a.value == b.value);
  CHECK(a.trace_hash == b.trace_hash);
  REQUIRE(a.primal.support.size() == b.primal.support.size());
  for (std::size_t i = 0; i < a.primal.support.size(); ++i) {
    CHECK(a.primal.support[i] == b.primal.support[i]);
  }
  CHECK(a.dual.prices == b.dual.prices);
  CHECK(a.dual.mu == b.dual.mu);
}

TEST_CASE("input validation") {
  const Valuation v = Valuation::additive({1, 2});
  MarginalLpSolver solver(v);
  CHECK_THROWS_AS(solver.solve(0, 0.5), MalformedInputError);
  CHECK_THROWS_AS(solver.solve(0b11, 0.0), MalformedInputError);
  CHECK_THROWS_AS(solver.solve(0b11, 1.5), MalformedInputError);
  CHECK_THROWS_AS(solver.solve(0b100, 0.5), MalformedInputError);
}
