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

#ifndef SECMARKET_MASKGEN_H_
#define SECMARKET_MASKGEN_H_

#include <cstdint>
#include <map>
#include <span>

#include "secmarket/fixedpoint.h"

namespace secmarket {

using Address = std::uint64_t;

// One data owner's key material for a round: a unique address and the seed
// standing in for its keypair. Real key agreement is replaced by a
// deterministic pairwise derivation; dropout is handled by failing the round,
// so no unmasking-recovery machinery exists. (Deployments that tolerate
// dropout secret-share the mask seeds with a collusion threshold; that
// threshold is out of scope here.)
struct DoIdentity {
  Address address = 0;
  std::uint64_t keypair_seed = 0;
};

// Unordered pair of addresses, normalized so lo < hi.
struct PairKey {
  Address lo = 0;
  Address hi = 0;

  PairKey() = default;
  PairKey(Address a, Address b) : lo(a < b ? a : b), hi(a < b ? b : a) {}
  friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

using PairwiseSeeds = std::map<PairKey, std::uint64_t>;

// Labeled mask for one owner in one round.
struct MaskVector {
  Address owner = 0;
  int round = 0;
  RingVector z;
};

// Simulated public-key interaction: derives the symmetric pairwise seed for
// every unordered pair in the roster. Throws RosterError if the roster has
// fewer than two members or duplicate addresses.
PairwiseSeeds key_exchange(std::span<const DoIdentity> roster);

// Expands the pairwise seeds into owner's additive mask:
//   Z_k = sum_{addr_j > addr_k} PRG(seed_kj, dim)
//       - sum_{addr_j < addr_k} PRG(seed_kj, dim)
// in the ring, so that a full roster's masks telescope to zero exactly.
// Throws RosterError if owner is not in the roster, ProtocolError if a
// pairwise seed is missing.
RingVector expand_mask(Address owner, std::span<const DoIdentity> roster,
                       const PairwiseSeeds& seeds, std::size_t dim);

// W + Z in the ring. Throws DimensionError on mismatch.
RingVector mask_model(const RingVector& w, const RingVector& z);

// The raw PRG stream backing mask expansion: dim ring elements drawn from
// SplitMix64(seed). Exposed for tests.
RingVector prg_stream(std::uint64_t seed, std::size_t dim);

}  // namespace secmarket

#endif  // SECMARKET_MASKGEN_H_
