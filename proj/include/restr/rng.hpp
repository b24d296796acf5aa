#pragma once

#include <cmath>
#include <cstdint>

namespace restr {

// Counter-based generator: draw k of stream `key` is a pure function of
// (key, k).  Child streams are re-keyed by index, so every Monte-Carlo
// draw can be reproduced in isolation and thread scheduling can never
// change the numbers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(avalanche(seed + kGamma)) {}

  // Independent stream for draw/worker `idx`.
  Rng child(std::uint64_t idx) const {
    Rng r(0);
    r.key_ = avalanche(key_ ^ avalanche(idx * kGamma + 0xd1b54a32d192ed03ull));
    r.ctr_ = 0;
    r.has_spare_ = false;
    return r;
  }

  std::uint64_t next_u64() { return avalanche(key_ + (ctr_++) * kGamma); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // unbiased enough for index sampling
  std::uint64_t uniform_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double exponential() { return -std::log1p(-uniform()); }

  double student_t3() {
    double z = normal();
    double a = normal(), b = normal(), c = normal();
    return z / std::sqrt((a * a + b * b + c * c) / 3.0);
  }

  // shape 2, scale 1; mean 1
  double inv_gamma_2_1() { return 1.0 / (exponential() + exponential()); }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;
  static constexpr double kPi = 3.141592653589793238462643383279502884;

  static std::uint64_t avalanche(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace restr
