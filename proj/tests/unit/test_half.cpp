#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>

#include "corrdim/half.hpp"
#include "doctest.h"

using corrdim::float_to_half;
using corrdim::half_to_float;

namespace {

// Independent decoder straight from the binary16 bit layout.
double decode_half(std::uint16_t h) {
  const int sign = (h >> 15) & 1;
  const int exp = (h >> 10) & 0x1f;
  const int frac = h & 0x3ff;
  double v;
  if (exp == 0) {
    v = std::ldexp(frac, -24);
  } else if (exp == 31) {
    v = frac ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
  } else {
    v = std::ldexp(1024 + frac, exp - 25);
  }
  return sign ? -v : v;
}

}  // namespace

TEST_CASE("every half bit pattern decodes like the reference") {
  for (std::uint32_t h = 0; h < 65536; ++h) {
    const double ref = decode_half(static_cast<std::uint16_t>(h));
    const float got = half_to_float(static_cast<std::uint16_t>(h));
    if (std::isnan(ref)) {
      CHECK(std::isnan(got));
    } else {
      CHECK(static_cast<double>(got) == ref);
    }
  }
}

TEST_CASE("half -> float -> half is the identity for non-NaN patterns") {
  for (std::uint32_t h = 0; h < 65536; ++h) {
    const auto bits = static_cast<std::uint16_t>(h);
    if (std::isnan(decode_half(bits))) continue;
    CHECK(float_to_half(half_to_float(bits)) == bits);
  }
}

TEST_CASE("float -> half rounds to the nearest representable value, ties to even") {
  // 1 + 2^-11 sits exactly between 1 and 1 + 2^-10
  CHECK(float_to_half(1.0f + std::ldexp(1.0f, -11)) == 0x3c00);
  CHECK(float_to_half(1.0f + 3 * std::ldexp(1.0f, -11)) == 0x3c02);
  CHECK(float_to_half(65504.0f) == 0x7bff);
  CHECK(float_to_half(65520.0f) == 0x7c00);
  CHECK(float_to_half(-std::numeric_limits<float>::infinity()) == 0xfc00);
  CHECK(float_to_half(std::ldexp(1.0f, -24)) == 0x0001);
  CHECK(float_to_half(std::ldexp(1.0f, -26)) == 0x0000);
  CHECK(std::isnan(half_to_float(float_to_half(std::numeric_limits<float>::quiet_NaN()))));

  // brute check against the reference on a sweep of floats
  for (float x = -70000.f; x < 70000.f; x += 13.37f) {
    const std::uint16_t h = float_to_half(x);
    const double got = decode_half(h);
    double best = std::numeric_limits<double>::infinity();
    for (int dh = -1; dh <= 1; ++dh) {
      const double alt = decode_half(static_cast<std::uint16_t>(h + dh));
      if (std::isfinite(alt) && std::signbit(alt) == std::signbit(got)) best = std::min(best, std::abs(alt - x));
    }
    if (std::isfinite(got)) CHECK(std::abs(got - x) <= best);
  }
}
