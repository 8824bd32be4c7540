#include "causalreg/random.hpp"

#include <algorithm>
#include <numeric>

#include "causalreg/errors.hpp"

namespace causalreg {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng stream_rng(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

double uniform01(Rng& rng) {
  // 53 random bits -> [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(rng);
}

double chi_squared(Rng& rng, double dof) {
  if (!(dof > 0.0)) throw DomainError("chi_squared: dof must be positive");
  std::chi_squared_distribution<double> d(dof);
  return d(rng);
}

std::vector<double> flat_dirichlet(Rng& rng, std::size_t k) {
  if (k == 0) throw DomainError("flat_dirichlet: dimension must be positive");
  std::exponential_distribution<double> expo(1.0);  // Gamma(1, 1)
  std::vector<double> out(k);
  double total = 0.0;
  for (auto& v : out) {
    v = expo(rng);
    total += v;
  }
  if (!(total > 0.0)) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(k));
    return out;
  }
  for (auto& v : out) v /= total;
  return out;
}

std::size_t categorical(Rng& rng, std::span<const double> probs) {
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (!(total > 0.0)) throw DomainError("categorical: weights sum to zero");
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding fell past the end: last category with positive weight.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return probs.size() - 1;
}

std::vector<std::uint32_t> multinomial(Rng& rng, std::uint64_t trials,
                                       std::span<const double> probs) {
  std::vector<std::uint32_t> counts(probs.size(), 0);
  double remaining_mass = std::accumulate(probs.begin(), probs.end(), 0.0);
  std::uint64_t remaining = trials;
  for (std::size_t i = 0; i + 1 < probs.size() && remaining > 0; ++i) {
    if (probs[i] <= 0.0) {
      remaining_mass -= probs[i];
      continue;
    }
    double p = remaining_mass > 0.0 ? probs[i] / remaining_mass : 1.0;
    p = std::clamp(p, 0.0, 1.0);
    std::binomial_distribution<std::uint64_t> bin(remaining, p);
    const std::uint64_t k = bin(rng);
    counts[i] = static_cast<std::uint32_t>(k);
    remaining -= k;
    remaining_mass -= probs[i];
  }
  if (!probs.empty() && remaining > 0) {
    // Remaining draws go to the last category with positive mass.
    std::size_t last = probs.size() - 1;
    while (last > 0 && probs[last] <= 0.0) --last;
    counts[last] += static_cast<std::uint32_t>(remaining);
  }
  return counts;
}

}  // namespace causalreg
