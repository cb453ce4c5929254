#pragma once

#include <cstdint>

namespace bfm {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline double to_unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Stateless counter-based generator: value(i) depends only on (seed, stream,
// i), so any draw can be replayed without replaying the ones before it.
class DerivedStream {
 public:
  DerivedStream(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ mix64(0x9e3779b97f4a7c15ull * (stream + 1)))) {}

  std::uint64_t bits(std::uint64_t index) const { return mix64(key_ + 0x632be59bd9b4e019ull * index); }
  double uniform(std::uint64_t index) const { return to_unit_interval(bits(index)); }
  std::uint64_t below(std::uint64_t index, std::uint64_t bound) const {
    return bound == 0 ? 0 : bits(index) % bound;
  }

 private:
  std::uint64_t key_;
};

// Random bits consumed by one mechanism run. Three independent streams:
//  (a) one partition coin per element,
//  (b) the index drawn from the threshold distribution,
//  (c) the branch coin.
// Fixing the tape fixes all three regardless of the reported costs, which is
// what makes replay-based threshold payments possible.
class RandomTape {
 public:
  explicit RandomTape(std::uint64_t seed)
      : seed_(seed), partition_(seed, 0), support_(seed, 1), branch_(seed, 2) {}

  std::uint64_t seed() const { return seed_; }

  bool in_group_one(int element) const { return partition_.bits(static_cast<std::uint64_t>(element)) & 1u; }
  double support_uniform() const { return support_.uniform(0); }
  double branch_uniform() const { return branch_.uniform(0); }

 private:
  std::uint64_t seed_;
  DerivedStream partition_;
  DerivedStream support_;
  DerivedStream branch_;
};

// Sequential convenience wrapper over a DerivedStream, for generators.
class SequentialRng {
 public:
  SequentialRng(std::uint64_t seed, std::uint64_t stream) : stream_(seed, stream) {}

  std::uint64_t next_bits() { return stream_.bits(counter_++); }
  double next_uniform() { return to_unit_interval(next_bits()); }
  // Uniform in {0, ..., bound-1}.
  std::uint64_t next_below(std::uint64_t bound) { return bound == 0 ? 0 : next_bits() % bound; }
  // Uniform in {lo, ..., hi} inclusive.
  std::int64_t next_range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

 private:
  DerivedStream stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace bfm
