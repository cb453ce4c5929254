#pragma once

#include <string>

#include "bfm/mechanism.hpp"

namespace bfm {

/// Instance files are UTF-8 JSON with fields `n`, `valuation {kind, params}`,
/// `true_costs` (integer grid units of budget / 2^bits_s), `budget`,
/// `bits_s`, and optional `epsilon`. Explicit tables list all 2^n values in
/// binary-mask order and must be normalized, monotone, and subadditive.
Instance instance_from_json(const std::string& text);
std::string instance_to_json(const Instance& instance);

Instance load_instance(const std::string& path);
void save_instance(const Instance& instance, const std::string& path);

}  // namespace bfm
