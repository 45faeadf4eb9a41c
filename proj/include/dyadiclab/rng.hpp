#pragma once
// Seeded streams keyed by (seed, operation id, stream index).  Every
// trial draws from its own stream, so results do not depend on how
// trials are scheduled across threads.

#include <cstdint>
#include <random>
#include <string_view>

namespace dyadiclab {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view op, std::uint64_t stream = 0) {
    const std::uint64_t key = fnv1a(op);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    eng_.seed(seq);
  }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  // integer in [lo, hi]
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng_);
  }
  int sign() { return (eng_() >> 63) ? 1 : -1; }
  bool bit() { return (eng_() >> 63) != 0; }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace dyadiclab
