#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include "noahsim/hash.hpp"

namespace noahsim {

// One independent stream per stochastic source (each class's arrival process,
// each scheduler's random choices, each class's service sampling). The stream
// seed is derived from the scenario seed and a stable label, so changing one
// source's consumption never perturbs another.
//
// Uniforms are built from the top 53 bits of mt19937_64 output and exponential
// variates use the inverse CDF, so sequences depend only on the standardized
// generator algorithm, not on library distribution internals.
class RandomStream {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64/53bit-inverse-cdf";

  RandomStream() : RandomStream(0, "default") {}

  RandomStream(uint64_t base_seed, std::string_view label)
      : label_(label),
        gen_(splitmix64(base_seed ^ fnv1a64(label))) {}

  // [0, 1)
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double exponential(double rate) {
    if (!(rate > 0)) throw std::domain_error("exponential: rate must be positive");
    return -std::log1p(-uniform()) / rate;
  }

  // Unbiased draw from [0, n).
  uint64_t uniform_int(uint64_t n) {
    if (n == 0) throw std::domain_error("uniform_int: empty range");
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

  const std::string& label() const { return label_; }

 private:
  std::string label_;
  std::mt19937_64 gen_;
};

}  // namespace noahsim
