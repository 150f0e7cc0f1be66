#ifndef HYPERMIX_RANDOM_HPP_
#define HYPERMIX_RANDOM_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hypermix {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent substreams from a seed.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Seed for the substream identified by `path` under `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

// Beta(a, b) via the ratio of two gamma variates.
double sample_beta(Rng& rng, double a, double b);

double sample_uniform(Rng& rng);  // [0, 1)
double sample_normal(Rng& rng);

}  // namespace hypermix

#endif  // HYPERMIX_RANDOM_HPP_
