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

#ifndef SECMARKET_FIXEDPOINT_H_
#define SECMARKET_FIXEDPOINT_H_

#include <cstdint>
#include <span>
#include <vector>

namespace secmarket {

// On-contract number format: reals scaled by 10^8 and stored as residues in
// Z_{2^64}. Negative values map to the upper half of the ring (two's
// complement), so additive masks cancel exactly for signed payloads.
inline constexpr std::int64_t kFixedPointScale = 100000000;  // 10^8

// Encodable magnitude bound. Residues of encoded values stay below 2^55, so
// any sum of up to 256 of them stays below 2^63 and the centered
// interpretation at decode time is unambiguous.
inline constexpr double kEncodeLimit =
    static_cast<double>(1ULL << 55) / static_cast<double>(kFixedPointScale);

// The largest group size for which the headroom argument above holds.
inline constexpr std::size_t kMaxUnambiguousTerms = 256;

struct RingElement {
  std::uint64_t value = 0;

  friend constexpr RingElement operator+(RingElement a, RingElement b) {
    return RingElement{a.value + b.value};  // wraps mod 2^64
  }
  friend constexpr RingElement operator-(RingElement a) {
    return RingElement{~a.value + 1};
  }
  friend constexpr RingElement operator-(RingElement a, RingElement b) {
    return a + (-b);
  }
  friend constexpr bool operator==(RingElement a, RingElement b) {
    return a.value == b.value;
  }
};

// round(x * 10^8), half away from zero, as a ring residue.
// Throws RangeError if x is not finite or |x| >= kEncodeLimit.
RingElement encode(double x);

// Centered interpretation of e (residues >= 2^63 are negative), then
// value / (10^8 * divisor). The divisor applies deferred averages (1/N,
// 1/|P'|) after exact integer summation. Throws RangeError if divisor == 0.
double decode(RingElement e, std::uint64_t divisor = 1);

// Fixed-dimension vector of ring elements. Dimension is set at construction;
// elementwise operations require equal dimensions.
class RingVector {
 public:
  RingVector() = default;
  explicit RingVector(std::size_t dim) : elems_(dim) {}
  explicit RingVector(std::vector<RingElement> elems)
      : elems_(std::move(elems)) {}

  std::size_t dim() const { return elems_.size(); }
  RingElement& operator[](std::size_t i) { return elems_[i]; }
  const RingElement& operator[](std::size_t i) const { return elems_[i]; }
  std::span<const RingElement> elems() const { return elems_; }

  friend bool operator==(const RingVector& a, const RingVector& b) {
    return a.elems_ == b.elems_;
  }

 private:
  std::vector<RingElement> elems_;
};

// Elementwise wrapping add / additive inverse. Throw DimensionError on
// mismatched dimensions.
RingVector ring_add(const RingVector& a, const RingVector& b);
RingVector ring_neg(const RingVector& a);

// Bulk encode/decode between real vectors and the ring representation.
RingVector encode(std::span<const double> xs);
std::vector<double> decode(const RingVector& v, std::uint64_t divisor = 1);

}  // namespace secmarket

#endif  // SECMARKET_FIXEDPOINT_H_
