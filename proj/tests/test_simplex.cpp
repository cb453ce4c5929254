#include "bfm/simplex.hpp"

#include <vector>

#include "bfm/errors.hpp"
#include "bfm/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bfm;

TEST_CASE("simplex solves a textbook maximization") {
  // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36.
  std::vector<lp::Constraint> rows(3);
  rows[0].coeffs = {1, 0};
  rows[0].rhs = 4;
  rows[1].coeffs = {0, 2};
  rows[1].rhs = 12;
  rows[2].coeffs = {3, 2};
  rows[2].rhs = 18;
  const lp::Solution sol = lp::maximize({3, 5}, rows);
  REQUIRE(sol.status == lp::Status::Optimal);
  CHECK(sol.objective == doctest::Approx(36.0));
  CHECK(sol.x[0] == doctest::Approx(2.0));
  CHECK(sol.x[1] == doctest::Approx(6.0));
  // Dual feasibility + complementary slackness pin duals (0, 3/2, 1).
  CHECK(sol.duals[0] == doctest::Approx(0.0));
  CHECK(sol.duals[1] == doctest::Approx(1.5));
  CHECK(sol.duals[2] == doctest::Approx(1.0));
}

TEST_CASE("simplex handles equality rows via phase one") {
  // max x + 2y  s.t. x + y = 1, y <= 0.6 -> (0.4, 0.6), value 1.6.
  std::vector<lp::Constraint> rows(2);
  rows[0].coeffs = {1, 1};
  rows[0].rhs = 1;
  rows[0].sense = lp::Sense::Eq;
  rows[1].coeffs = {0, 1};
  rows[1].rhs = 0.6;
  const lp::Solution sol = lp::maximize({1, 2}, rows);
  REQUIRE(sol.status == lp::Status::Optimal);
  CHECK(sol.objective == doctest::Approx(1.6));
  CHECK(sol.x[0] == doctest::Approx(0.4));
  CHECK(sol.x[1] == doctest::Approx(0.6));
}

TEST_CASE("simplex reports infeasible and unbounded programs") {
  std::vector<lp::Constraint> rows(2);
  rows[0].coeffs = {1};
  rows[0].rhs = 1;
  rows[0].sense = lp::Sense::Eq;
  rows[1].coeffs = {1};
  rows[1].rhs = 0.5;
  CHECK(lp::maximize({1}, rows).status == lp::Status::Infeasible);

  std::vector<lp::Constraint> open(1);
  open[0].coeffs = {0, 1};
  open[0].rhs = 1;
  CHECK(lp::maximize({1, 0}, open).status == lp::Status::Unbounded);
}

TEST_CASE("simplex rejects negative right-hand sides") {
  std::vector<lp::Constraint> rows(1);
  rows[0].coeffs = {1};
  rows[0].rhs = -1;
  CHECK_THROWS_AS(lp::maximize({1}, rows), MalformedInputError);
}

TEST_CASE("simplex is deterministic and matches vertex enumeration") {
  SequentialRng rng(4242, 0);
  for (int round = 0; round < 60; ++round) {
    const int vars = 2 + static_cast<int>(rng.next_below(3));
    const int cons = 2 + static_cast<int>(rng.next_below(4));
    std::vector<double> objective(vars);
    for (double& c : objective) c = static_cast<double>(rng.next_range(0, 9));
    std::vector<lp::Constraint> rows(cons);
    for (auto& row : rows) {
      row.coeffs.assign(vars, 0.0);
      for (double& a : row.coeffs) a = static_cast<double>(rng.next_range(0, 6));
      row.rhs = static_cast<double>(rng.next_range(1, 12));
    }
    // Guarantee boundedness: cap the total mass.
    lp::Constraint cap;
    cap.coeffs.assign(vars, 1.0);
    cap.rhs = 20.0;
    rows.push_back(cap);

    const lp::Solution a = lp::maximize(objective, rows);
    const lp::Solution b = lp::maximize(objective, rows);
    REQUIRE(a.status == lp::Status::Optimal);
    CHECK(a.objective == b.objective);
    CHECK(a.x == b.x);
    CHECK(a.trace_hash == b.trace_hash);

    const double reference = test::vertex_lp_max(objective, rows);
    CHECK(a.objective == doctest::Approx(reference).epsilon(1e-7));

    // Weak duality at the returned duals: y >= 0 and y.b == objective.
    double dual_value = 0.0;
    for (int i = 0; i < cons + 1; ++i) {
      CHECK(a.duals[i] >= -1e-9);
      dual_value += a.duals[i] * rows[i].rhs;
    }
    CHECK(dual_value == doctest::Approx(a.objective).epsilon(1e-7));
  }
}
