/*
 * Copyright 2026 The secmarket Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SECMARKET_PRNG_H_
#define SECMARKET_PRNG_H_

#include <cstdint>
#include <cstring>
#include <string_view>
#include <vector>

namespace secmarket {

// All randomness in the simulator flows through SplitMix64 (Steele, Lea &
// Flood), a 64-bit counter-based generator. It is not cryptographic; the
// simulator needs bit-exact reproducibility across platforms, which the
// standard-library distributions do not guarantee.
inline constexpr std::uint64_t kSplitMix64Gamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += kSplitMix64Gamma;
    return splitmix64_mix(state_);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  // Uniform integer in [0, n), n >= 1. Modulo bias is irrelevant at the
  // population sizes used here.
  std::uint64_t next_below(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t state_;
};

// Order-sensitive combination of seed material; used to derive independent
// substreams (per round, per participant, per purpose).
constexpr std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64_mix(a + kSplitMix64Gamma * (b + 1));
}

constexpr std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b,
                                    std::uint64_t c) {
  return derive_seed(derive_seed(a, b), c);
}

constexpr std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b,
                                    std::uint64_t c, std::uint64_t d) {
  return derive_seed(derive_seed(a, b, c), d);
}

// FNV-1a over a label, for naming substreams ("sample", "adapt", ...).
constexpr std::uint64_t stream_tag(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::vector<double> uniform_vector(std::uint64_t seed, std::size_t n,
                                          double lo, double hi) {
  SplitMix64 rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = rng.next_uniform(lo, hi);
  return out;
}

// Seeded Fisher-Yates shuffle over an index vector.
inline std::vector<std::size_t> shuffled_indices(std::size_t n,
                                                 std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  SplitMix64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = rng.next_below(i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

// First k entries of a seeded permutation of [0, n).
inline std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                           std::size_t k,
                                                           std::uint64_t seed) {
  auto idx = shuffled_indices(n, seed);
  idx.resize(k < n ? k : n);
  return idx;
}

}  // namespace secmarket

#endif  // SECMARKET_PRNG_H_
