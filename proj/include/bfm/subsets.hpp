#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

namespace bfm {

// Subsets of a ground set of at most kMaxElements elements, as bitmasks.
// Element i corresponds to bit i. The canonical total order on subsets is
// the numeric order of masks; it is the order induced by perturbing prices
// with tiny penalties proportional to 2^i, so every tie-break in the code
// base resolves to the numerically smallest mask.
using Mask = std::uint32_t;

inline constexpr int kMaxElements = 32;

inline Mask full_mask(int n) { return n >= 32 ? ~Mask{0} : ((Mask{1} << n) - 1); }
inline bool contains(Mask s, int e) { return (s >> e) & 1u; }
inline int subset_size(Mask s) { return std::popcount(s); }

// Visits every subset of `space` in ascending mask order, starting at the
// empty set.
template <typename F>
void for_each_subset(Mask space, F&& fn) {
  Mask sub = 0;
  while (true) {
    fn(sub);
    if (sub == space) break;
    sub = (sub - space) & space;
  }
}

inline std::vector<int> mask_elements(Mask s) {
  std::vector<int> out;
  for (Mask m = s; m != 0; m &= m - 1) out.push_back(std::countr_zero(m));
  return out;
}

inline std::string mask_to_string(Mask s) {
  std::string out = "{";
  bool first = true;
  for (int e : mask_elements(s)) {
    if (!first) out += ",";
    out += std::to_string(e);
    first = false;
  }
  out += "}";
  return out;
}

}  // namespace bfm
