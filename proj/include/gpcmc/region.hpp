#pragma once

#include <cstdint>

namespace gpcmc {

/// Integration region of one coordinate: constrained to v >= 0 or left free.
enum class Region : std::uint8_t { HalfLinePositive = 0, FullLine = 1 };

}  // namespace gpcmc
