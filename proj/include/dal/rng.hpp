#pragma once

#include <cstdint>

namespace dal {

// Counter-based generator: every uniform is a pure function of
// (master_seed, trial_index, stream, k), so draws do not depend on the order
// in which indices or trials are evaluated.

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream identifiers. Exponents and coefficient moduli never share a stream.
enum class Stream : std::uint64_t {
  Exponent = 1,
  Coefficient = 2,
  PairwiseBaseU = 3,
  PairwiseBaseV = 4,
};

inline constexpr std::uint64_t keyed_bits(std::uint64_t master_seed,
                                          std::uint64_t trial_index,
                                          Stream stream, std::uint64_t k) {
  std::uint64_t h = splitmix64(master_seed);
  h = splitmix64(h ^ splitmix64(trial_index + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL);
  h = splitmix64(h ^ k);
  return h;
}

/// Maps 64 random bits to the open interval (0, 1) with 53-bit resolution.
inline constexpr double bits_to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline constexpr double keyed_uniform(std::uint64_t master_seed,
                                      std::uint64_t trial_index, Stream stream,
                                      std::uint64_t k) {
  return bits_to_open_unit(keyed_bits(master_seed, trial_index, stream, k));
}

/// Pairwise-independent uniforms over the prime field Z_p, p = 2^61 - 1.
///
/// With U, V independent and uniform on Z_p, X_k = (U + k V) mod p. For
/// j != k the map (U, V) -> (X_j, X_k) is a bijection of Z_p^2, so every
/// pair is exactly independent and uniform, while X_0 - 2 X_1 + X_2 = 0
/// shows triples are not. This is the integer form of the fractional-part
/// scheme {a_k U + b_k V mod 1} with (a_k, b_k) = (1, k).
class PairwiseUniforms {
 public:
  static constexpr std::uint64_t kPrime = (std::uint64_t{1} << 61) - 1;

  PairwiseUniforms(std::uint64_t master_seed, std::uint64_t trial_index)
      : u_(draw(master_seed, trial_index, Stream::PairwiseBaseU)),
        v_(draw(master_seed, trial_index, Stream::PairwiseBaseV)) {}

  std::uint64_t raw(std::uint64_t k) const {
    return add_mod(u_, mul_mod(k % kPrime, v_));
  }

  double operator()(std::uint64_t k) const {
    return (static_cast<double>(raw(k)) + 0.5) / static_cast<double>(kPrime);
  }

 private:
  static std::uint64_t draw(std::uint64_t seed, std::uint64_t trial, Stream s) {
    // rejection keeps the base variable exactly uniform on Z_p
    for (std::uint64_t attempt = 0;; ++attempt) {
      const std::uint64_t bits = keyed_bits(seed, trial, s, attempt) >> 3;
      if (bits < kPrime) return bits;
    }
  }
  static std::uint64_t add_mod(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = a + b;
    while (r >= kPrime) r -= kPrime;
    return r;
  }
  static std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b) {
    const unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
    std::uint64_t lo = static_cast<std::uint64_t>(prod & kPrime);
    std::uint64_t hi = static_cast<std::uint64_t>(prod >> 61);
    return add_mod(lo, hi);
  }

  std::uint64_t u_;
  std::uint64_t v_;
};

}  // namespace dal
