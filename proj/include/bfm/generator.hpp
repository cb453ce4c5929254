#pragma once

#include <cstdint>
#include <string>

#include "bfm/mechanism.hpp"

namespace bfm {

/// Random instance families. All families produce integer-valued valuations
/// so that demand-query arithmetic stays exact on the dyadic grid.
///  - "additive":  weights in 1..max_weight
///  - "xos":       `clauses` additive clauses, weights 0..max_weight
///  - "coverage":  weighted points, random cover sets
///  - "explicit":  random XOS base plus noise, capped; rejection-sampled
///                 until the table is normalized, monotone, and subadditive
/// Cost models: "uniform" (uniform grid units) or "correlated"
/// (proportional to the element's singleton value, with noise).
struct GeneratorSpec {
  std::string family = "additive";
  int n = 8;
  int bits = 6;
  double budget = 1.0;
  int clauses = 3;
  int points = 0;  // coverage; 0 = 2n
  int max_weight = 16;
  std::string cost_model = "uniform";
  double epsilon = 0.0;
};

Instance generate_instance(const GeneratorSpec& spec, std::uint64_t seed);

}  // namespace bfm
