#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace lcsum {

std::uint64_t splitmix64(std::uint64_t x);
// Order-independent derived seed for (seed, index).
std::uint64_t hash64(std::uint64_t seed, std::uint64_t index);
// FNV-1a over bytes, then mixed.
std::uint64_t hash_string(std::string_view s);

// Seeded generator with the samplers the library needs. Every sampler is
// written against mt19937_64 so draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  // Independent stream keyed by `stream`.
  Rng derive(std::uint64_t stream) const { return Rng(hash64(seed_, stream)); }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();  // [0, 1)
  double uniform_open();  // (0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Inclusive range, unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();
  double gamma(double shape, double scale);
  std::int64_t poisson(double mean);
  double gumbel();

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lcsum
