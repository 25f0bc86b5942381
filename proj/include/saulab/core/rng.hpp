#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace sau {

// Splittable counter-based generator (splitmix64). Every stochastic routine
// in the project takes an explicit Rng (or seed) so runs are reproducible
// and independent streams can be derived without coupling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Derive an independent stream; the parent advances once.
  Rng split(std::uint64_t stream) {
    std::uint64_t s = next_u64();
    return Rng(s ^ (stream * 0xd6e8feb86659fd93ULL + 0x2545f4914f6cdd1dULL));
  }

  // Uniform in [0, 1) with 24 bits of mantissa.
  float uniform() { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }

  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; implemented here so results do not depend on the standard
  // library's distribution internals.
  float gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    float u1 = uniform();
    float u2 = uniform();
    if (u1 < 1e-12f) u1 = 1e-12f;
    float r = std::sqrt(-2.0f * std::log(u1));
    float a = 6.28318530717958647692f * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // First k entries of a seeded permutation of {0..n-1}.
  std::vector<int> choose(int n, int k) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k && i < n; ++i) {
      int j = i + static_cast<int>(below(static_cast<std::uint64_t>(n - i)));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(std::min(n, k));
    return idx;
  }

 private:
  std::uint64_t state_;
  float spare_ = 0.0f;
  bool have_spare_ = false;
};

}  // namespace sau
