#ifndef BMMIX_RNG_HPP
#define BMMIX_RNG_HPP

#include <cstdint>
#include <random>

#include "bmmix/common.hpp"

namespace bmmix {

// SplitMix64 step, used to derive child stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d4a2a7145db3b5ULL;
  return z ^ (z >> 31);
}

// A splittable RNG stream. Every consumer (chain, location, replicate)
// receives its own stream derived from (seed, path of split ids), so
// results do not depend on evaluation order or thread scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {
    std::uint64_t s = seed ^ (0x632be59bd9b4e019ULL * (stream + 1));
    const std::uint64_t a = splitmix64(s);
    const std::uint64_t b = splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    eng_.seed(seq);
  }

  // Child stream; deterministic in (seed, parent stream, child id).
  RngStream split(std::uint64_t child_id) const {
    std::uint64_t s = seed_ ^ (0x9e3779b97f4a7c15ULL * (stream_ + 1));
    const std::uint64_t mixed = splitmix64(s) ^ (0xd1342543de82ef95ULL * (child_id + 1));
    return RngStream(mixed, child_id);
  }

  std::mt19937_64& engine() { return eng_; }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }

  double normal(double mu = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mu, sd)(eng_);
  }

  // Gamma with shape/rate parametrization.
  double gamma(double shape, double rate) {
    return std::gamma_distribution<double>(shape, 1.0 / rate)(eng_);
  }

  std::uint64_t next_u64() { return eng_(); }

  VectorXd normal_vec(Index n, double mu = 0.0, double sd = 1.0) {
    VectorXd out(n);
    for (Index i = 0; i < n; ++i) out[i] = normal(mu, sd);
    return out;
  }

  VectorXd dirichlet(const VectorXd& alpha) {
    VectorXd g(alpha.size());
    for (Index i = 0; i < alpha.size(); ++i) {
      require(alpha[i] > 0.0, "dirichlet: alpha must be positive");
      g[i] = std::gamma_distribution<double>(alpha[i], 1.0)(eng_);
      // Shape < 1 can underflow to exactly zero; keep interior.
      if (g[i] <= 0.0) g[i] = std::numeric_limits<double>::min();
    }
    return g / g.sum();
  }

  // Index in [0, n) with the given (unnormalized) weights.
  Index categorical(const VectorXd& weights) {
    std::discrete_distribution<int> d(weights.data(), weights.data() + weights.size());
    return d(eng_);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 eng_;
};

}  // namespace bmmix

#endif  // BMMIX_RNG_HPP
