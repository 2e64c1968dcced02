#pragma once

// Seedable, splittable PRNG used everywhere randomness is needed, chosen so
// that any language can reproduce the exact streams. Recurrences:
//
// SplitMix64 (Steele, Lea, Flood 2014), state s (uint64):
//   s += 0x9E3779B97F4A7C15
//   z  = s
//   z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   output z ^ (z >> 31)
//
// xoshiro256** (Blackman, Vigna 2018), state s[4] (uint64), seeded by the
// first four outputs of SplitMix64(seed):
//   output = rotl64(s[1] * 5, 7) * 9
//   t = s[1] << 17
//   s[2] ^= s[0]; s[3] ^= s[1]; s[1] ^= s[2]; s[0] ^= s[3]
//   s[2] ^= t;    s[3] = rotl64(s[3], 45)
//
// Derived quantities (all arithmetic on IEEE-754 binary64):
//   uniform double in [0,1):  (next_u64() >> 11) * 2^-53
//   bounded integer < n:      mask = bit_ceil(n) - 1; draw v = next_u64() & mask
//                             until v < n (masked rejection, exactly uniform)
//   shuffle:                  Fisher-Yates, i = n-1 .. 1, j = below(i+1), swap
//   k distinct of p:          partial Fisher-Yates on the identity array,
//                             i = 0 .. k-1: j = i + below(p－i), swap; take
//                             the first k, then sort ascending
//   standard normal:          inverse CDF applied to one uniform per deviate
//                             (Acklam's rational approximation, |rel err| <
//                             1.15e-9; a zero uniform is mapped to 2^-53)
//
// Sub-stream derivation: child_seed(seed, k) is the (k+1)-th output of
// SplitMix64(seed).
//
// The normal inverse CDF and the simulation response avoid libm log/sin in
// favour of the fixed-order polynomial evaluations below, so streams are
// bit-identical across standard libraries, not just across runs.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace pforest {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// (k+1)-th output of SplitMix64(seed); used to derive independent sub-seeds.
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t s = seed;
  std::uint64_t z = 0;
  for (std::uint64_t i = 0; i <= k; ++i) z = splitmix64_next(s);
  return z;
}

// ln(x) for finite x > 0 via frexp plus the atanh series on [0.5, 1):
//   ln(m * 2^e) = e*ln2 + 2*atanh(z), z = (m-1)/(m+1),
//   atanh(z) = z + z^3/3 + ... + z^31/31 (Horner, fixed order).
inline double portable_log(double x) {
  // Exact at 1: the series cannot cancel e*ln2 there, and downstream
  // identities (entropy of a pure distribution, log of a ratio equal to 1)
  // need a true zero.
  if (x == 1.0) return 0.0;
  int e = 0;
  double m = std::frexp(x, &e);  // m in [0.5, 1), exact
  const double z = (m - 1.0) / (m + 1.0);
  const double z2 = z * z;
  double s = 1.0 / 31.0;
  for (int k = 29; k >= 1; k -= 2) s = s * z2 + 1.0 / static_cast<double>(k);
  constexpr double kLn2 = 0.6931471805599453;
  return static_cast<double>(e) * kLn2 + 2.0 * z * s;
}

inline double portable_log2(double x) {
  constexpr double kInvLn2 = 1.4426950408889634;
  return portable_log(x) * kInvLn2;
}

// sin(x) on [0, 1] only: Taylor series to x^15, Horner. The first omitted
// term x^17/17! bounds the truncation error at 2.9e-15 (right end of the
// interval); evaluation rounding adds well under one ulp of that.
inline double portable_sin_01(double x) {
  const double x2 = x * x;
  double s = -1.0 / 1307674368000.0;  // -1/15!
  s = s * x2 + 1.0 / 6227020800.0;    //  1/13!
  s = s * x2 - 1.0 / 39916800.0;      // -1/11!
  s = s * x2 + 1.0 / 362880.0;        //  1/9!
  s = s * x2 - 1.0 / 5040.0;          // -1/7!
  s = s * x2 + 1.0 / 120.0;           //  1/5!
  s = s * x2 - 1.0 / 6.0;             // -1/3!
  return x + x * x2 * s;
}

// Acklam's inverse normal CDF, valid for u in (0,1).
inline double normal_inv_cdf(double u) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (u < p_low) {
    const double q = std::sqrt(-2.0 * portable_log(u));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (u > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * portable_log(1.0 - u));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = u - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = std::rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); exactly uniform via masked rejection.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t mask = std::bit_ceil(n) - 1;
    std::uint64_t v;
    do {
      v = next_u64() & mask;
    } while (v >= n);
    return v;
  }

  double next_normal() {
    double u = next_double();
    if (u <= 0.0) u = 0x1.0p-53;
    return normal_inv_cdf(u);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from {0, ..., p-1}, returned sorted ascending.
  std::vector<int> sample_indices(int p, int k, std::vector<int>& scratch) {
    scratch.resize(static_cast<std::size_t>(p));
    std::iota(scratch.begin(), scratch.end(), 0);
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(next_below(static_cast<std::uint64_t>(p - i)));
      std::swap(scratch[static_cast<std::size_t>(i)], scratch[static_cast<std::size_t>(j)]);
    }
    std::vector<int> picked(scratch.begin(), scratch.begin() + k);
    std::sort(picked.begin(), picked.end());
    return picked;
  }

 private:
  std::uint64_t state_[4];
};

}  // namespace pforest
