#pragma once

#include <numbers>

namespace rvarena::constants {

// IAU 2015 nominal mass parameters. Generator and evaluator both read these,
// so forward models agree bit-for-bit.
inline constexpr double gm_sun = 1.3271244e20;  // m^3 s^-2
inline constexpr double gm_jup = 1.2668653e17;  // m^3 s^-2
inline constexpr double seconds_per_day = 86400.0;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace rvarena::constants
