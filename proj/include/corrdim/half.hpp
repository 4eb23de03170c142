#pragma once

#include <cstdint>

namespace corrdim {

// IEEE 754 binary16 <-> binary32. Conversion to half rounds to nearest even;
// infinities are preserved and NaN stays NaN.
float half_to_float(std::uint16_t h);
std::uint16_t float_to_half(float f);

}  // namespace corrdim
