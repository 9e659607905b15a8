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

#ifndef SECMARKET_ADVERSARY_H_
#define SECMARKET_ADVERSARY_H_

#include <cstdint>
#include <vector>

#include "secmarket/fixedpoint.h"

namespace secmarket {

// Byzantine contributor behaviors. Adversaries follow the masking protocol
// correctly; the corruption is in the payload (RandomUpdate) or in withheld
// submissions (DropOut, which drives the round-timeout path).
enum class AdversaryKind { kNone, kRandomUpdate, kDropOut };

struct AdversaryProfile {
  AdversaryKind kind = AdversaryKind::kNone;
  double rate = 0.0;  // fraction of the contributor population corrupted
  std::uint64_t seed = 0;
  // RandomUpdate bots run a common faulty generator: this is the fraction
  // of payload coordinates drawn from the stream shared by all bots; the
  // rest come from a per-bot stream. A bot uploads the same faulty payload
  // every time it participates.
  double payload_correlation = 0.8;
};

const char* to_string(AdversaryKind kind);

// Encoded elementwise-uniform reals in [-1, 1], deterministic per seed.
RingVector random_update(std::size_t dim, std::uint64_t seed);

// Flags floor(rate * population) contributors, sampled without replacement.
std::vector<bool> assign_adversaries(std::size_t population,
                                     const AdversaryProfile& profile);

// The payload a RandomUpdate bot submits: uniform [-1, 1] data of the full
// dimension, with the leading payload_correlation fraction of coordinates
// drawn from the bots' shared stream and the tail from the bot's own stream.
RingVector byzantine_payload(std::size_t dim, const AdversaryProfile& profile,
                             std::uint64_t bot_index);

}  // namespace secmarket

#endif  // SECMARKET_ADVERSARY_H_
