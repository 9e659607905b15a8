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

#include "secmarket/adversary.h"

#include <cmath>

#include "secmarket/errors.h"
#include "secmarket/prng.h"

namespace secmarket {

const char* to_string(AdversaryKind kind) {
  switch (kind) {
    case AdversaryKind::kNone:
      return "none";
    case AdversaryKind::kRandomUpdate:
      return "random_update";
    case AdversaryKind::kDropOut:
      return "drop_out";
  }
  return "?";
}

RingVector random_update(std::size_t dim, std::uint64_t seed) {
  if (dim < 1) {
    throw RangeError("random_update: dim must be >= 1");
  }
  SplitMix64 rng(seed);
  RingVector out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    out[i] = encode(rng.next_uniform(-1.0, 1.0));
  }
  return out;
}

std::vector<bool> assign_adversaries(std::size_t population,
                                     const AdversaryProfile& profile) {
  if (profile.rate < 0.0 || profile.rate > 1.0) {
    throw ConfigError("assign_adversaries: rate must lie in [0, 1]");
  }
  std::vector<bool> flags(population, false);
  if (profile.kind == AdversaryKind::kNone) return flags;
  const std::size_t corrupted = static_cast<std::size_t>(
      std::floor(profile.rate * static_cast<double>(population)));
  const auto chosen = sample_without_replacement(
      population, corrupted, derive_seed(profile.seed, stream_tag("assign")));
  for (std::size_t idx : chosen) flags[idx] = true;
  return flags;
}

RingVector byzantine_payload(std::size_t dim, const AdversaryProfile& profile,
                             std::uint64_t bot_index) {
  if (profile.payload_correlation < 0.0 ||
      profile.payload_correlation > 1.0) {
    throw ConfigError("byzantine_payload: correlation must lie in [0, 1]");
  }
  const std::size_t shared_len = static_cast<std::size_t>(
      std::floor(profile.payload_correlation * static_cast<double>(dim)));
  RingVector out(dim);
  if (shared_len > 0) {
    const RingVector shared = random_update(
        shared_len, derive_seed(profile.seed, stream_tag("shared")));
    for (std::size_t i = 0; i < shared_len; ++i) out[i] = shared[i];
  }
  if (shared_len < dim) {
    const RingVector own = random_update(
        dim - shared_len,
        derive_seed(profile.seed, stream_tag("own"), bot_index));
    for (std::size_t i = shared_len; i < dim; ++i) {
      out[i] = own[i - shared_len];
    }
  }
  return out;
}

}  // namespace secmarket
