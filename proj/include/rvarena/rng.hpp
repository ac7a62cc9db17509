#pragma once

// Seeded random streams. The engine (mt19937_64) and std::seed_seq are fully
// specified by the standard; the distributions come from Boost.Random because
// the std:: distributions are implementation-defined and would break
// cross-platform reproducibility of generated tasks.

#include <cstdint>
#include <random>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace rvarena {

using Rng = std::mt19937_64;

/// Independent stream `stream` of a task seed.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return boost::random::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return boost::random::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double standard_normal(Rng& rng) {
  return boost::random::normal_distribution<double>(0.0, 1.0)(rng);
}

inline double beta(Rng& rng, double alpha, double beta_param) {
  return boost::random::beta_distribution<double>(alpha, beta_param)(rng);
}

}  // namespace rvarena
