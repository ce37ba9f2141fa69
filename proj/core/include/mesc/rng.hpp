#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mesc {

// Deterministic RNG wrapper. mt19937_64 output is pinned by the standard;
// the std distributions are not, so they are hand-rolled here to keep
// artifacts byte-identical across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, n) via rejection sampling.
  uint64_t uniform_u64(uint64_t n);

  int uniform_int(int lo, int hi);  // inclusive bounds

  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, cached spare discarded to keep call sequences simple.
  double normal(double mean = 0.0, double stddev = 1.0);

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = uniform_u64(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Weighted index draw; weights must be non-negative with positive sum.
  size_t weighted_index(const std::vector<double>& weights);

 private:
  std::mt19937_64 gen_;
};

// FNV-1a over arbitrary bytes; used for config hashing and seed derivation.
uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ull);
uint64_t fnv1a64(const std::string& s, uint64_t seed = 0xcbf29ce484222325ull);

// Expands one master seed into a named per-stage seed.
uint64_t derive_seed(uint64_t master, const std::string& label);

}  // namespace mesc
