#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace corrdim {

// Platform-stable random source shared by every generator and sampler:
// std::mt19937_64 with hand-written distributions.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, bound), bound > 0, rejection-sampled.
  std::uint64_t below(std::uint64_t bound);

  // Standard normal via the polar Box-Muller method.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace corrdim
