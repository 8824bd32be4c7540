#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace causalreg {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Engine for stream `stream` of the master seed `seed`. Streams are
/// independent of the order in which they are requested.
Rng stream_rng(std::uint64_t seed, std::uint64_t stream);

double uniform01(Rng& rng);
double standard_normal(Rng& rng);
double chi_squared(Rng& rng, double dof);

/// Flat Dirichlet draw of dimension k (all-ones concentration).
std::vector<double> flat_dirichlet(Rng& rng, std::size_t k);

/// Categorical draw from unnormalized nonnegative weights.
std::size_t categorical(Rng& rng, std::span<const double> probs);

/// Multinomial counts of `trials` draws from `probs` (sequential binomials).
std::vector<std::uint32_t> multinomial(Rng& rng, std::uint64_t trials,
                                       std::span<const double> probs);

template <class T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

}  // namespace causalreg
