#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace exsurv {

using Rng = std::mt19937_64;

/// Stream for Monte Carlo worker `worker` under master seed `seed`.
/// Distinct (seed, worker) pairs give independent-looking streams.
inline Rng make_rng(std::uint64_t seed, std::uint64_t worker = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(worker), static_cast<std::uint32_t>(worker >> 32),
                    0x5eedu};
  return Rng(seq);
}

/// Uniform draw on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  // 53 random bits, offset by half a unit so 0 and 1 are never produced.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double exponential(Rng& rng, double rate) { return -std::log(uniform_open(rng)) / rate; }

}  // namespace exsurv
