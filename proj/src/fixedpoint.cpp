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

#include "secmarket/fixedpoint.h"

#include <bit>
#include <cmath>
#include <string>

#include "secmarket/errors.h"

namespace secmarket {

RingElement encode(double x) {
  if (!std::isfinite(x) || std::fabs(x) >= kEncodeLimit) {
    throw RangeError("encode: value " + std::to_string(x) +
                     " outside encodable range (|x| < " +
                     std::to_string(kEncodeLimit) + ")");
  }
  // llround rounds halfway cases away from zero on every platform.
  const std::int64_t scaled =
      std::llround(x * static_cast<double>(kFixedPointScale));
  return RingElement{static_cast<std::uint64_t>(scaled)};
}

double decode(RingElement e, std::uint64_t divisor) {
  if (divisor == 0) {
    throw RangeError("decode: divisor must be positive");
  }
  const std::int64_t centered = std::bit_cast<std::int64_t>(e.value);
  return static_cast<double>(centered) /
         (static_cast<double>(kFixedPointScale) *
          static_cast<double>(divisor));
}

namespace {

void require_equal_dims(const RingVector& a, const RingVector& b,
                        const char* op) {
  if (a.dim() != b.dim()) {
    throw DimensionError(std::string(op) + ": dimension mismatch (" +
                         std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()) + ")");
  }
}

}  // namespace

RingVector ring_add(const RingVector& a, const RingVector& b) {
  require_equal_dims(a, b, "ring_add");
  RingVector out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i] + b[i];
  return out;
}

RingVector ring_neg(const RingVector& a) {
  RingVector out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = -a[i];
  return out;
}

RingVector encode(std::span<const double> xs) {
  RingVector out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = encode(xs[i]);
  return out;
}

std::vector<double> decode(const RingVector& v, std::uint64_t divisor) {
  std::vector<double> out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = decode(v[i], divisor);
  return out;
}

}  // namespace secmarket
