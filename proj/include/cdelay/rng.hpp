#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cdelay {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for the named sub-stream of a run seed. Distinct names give
/// statistically independent generators.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

/// Uniform double in [0, 1) with 53 bits of randomness.
double uniform01(Rng& rng);

/// The four independent random streams of one experiment seed.
///
/// env     initial-state draws (one reset seed per episode)
/// delay   observation delays
/// explore action sampling and epsilon-greedy decisions
/// init    parameter initialisation, then minibatch and target sampling
struct RngStreams {
  Rng env;
  Rng delay;
  Rng explore;
  Rng init;

  explicit RngStreams(std::uint64_t seed);
};

}  // namespace cdelay
