#pragma once

#include <cstdint>

namespace moba::runtime {

// IEEE 754 binary16 <-> binary32, round-to-nearest-even, with subnormals,
// infinities and NaN (quiet, payload truncated).
uint16_t float_to_half(float f);
float half_to_float(uint16_t h);

inline float round_to_half(float f) { return half_to_float(float_to_half(f)); }

}  // namespace moba::runtime
