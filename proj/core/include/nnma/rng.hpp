#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace nnma {

// xoshiro256** seeded through splitmix64. Every random draw in the library
// (initialization, shuffling, dropout, synthetic data) goes through this
// generator so that runs are reproducible from a single 64-bit seed.
//
//   uniform()        = (next() >> 11) * 2^-53              in [0, 1)
//   uniform(lo, hi)  = lo + (hi - lo) * uniform()
//   index(n)         = floor(uniform() * n)                in [0, n)
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed);

  std::uint64_t next();
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }

  using State = std::array<std::uint64_t, 4>;
  const State& state() const { return state_; }
  void set_state(const State& s) { state_ = s; }

 private:
  State state_{};
};

// Fisher-Yates, drawing j = index(i + 1) for i = n-1 down to 1.
template <typename Container>
void shuffle(Container& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = rng.index(i);
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace nnma
