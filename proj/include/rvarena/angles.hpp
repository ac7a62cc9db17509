#pragma once

#include <cmath>

#include "rvarena/constants.hpp"

namespace rvarena {

/// Reduces an angle to [0, 2π).
inline double wrap_two_pi(double angle) {
  double r = std::fmod(angle, constants::two_pi);
  if (r < 0.0) r += constants::two_pi;
  // fmod of a tiny negative value can round up to exactly 2π
  if (r >= constants::two_pi) r = 0.0;
  return r;
}

/// Smallest signed difference a − b on the circle, in (−π, π].
inline double circular_difference(double a, double b) {
  double d = wrap_two_pi(a - b);
  return d > constants::pi ? d - constants::two_pi : d;
}

}  // namespace rvarena
