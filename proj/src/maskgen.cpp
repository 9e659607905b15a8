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

#include "secmarket/maskgen.h"

#include <set>
#include <string>

#include "secmarket/errors.h"
#include "secmarket/prng.h"

namespace secmarket {

namespace {

// Symmetric in the two identities: material is ordered by address before
// mixing, so either side derives the same seed.
std::uint64_t pairwise_seed(const DoIdentity& a, const DoIdentity& b) {
  const DoIdentity& lo = a.address < b.address ? a : b;
  const DoIdentity& hi = a.address < b.address ? b : a;
  return derive_seed(lo.keypair_seed, hi.keypair_seed, lo.address, hi.address);
}

}  // namespace

PairwiseSeeds key_exchange(std::span<const DoIdentity> roster) {
  if (roster.size() < 2) {
    throw RosterError("key_exchange: roster needs at least 2 members, got " +
                      std::to_string(roster.size()));
  }
  std::set<Address> seen;
  for (const auto& id : roster) {
    if (!seen.insert(id.address).second) {
      throw RosterError("key_exchange: duplicate address " +
                        std::to_string(id.address));
    }
  }
  PairwiseSeeds seeds;
  for (std::size_t i = 0; i < roster.size(); ++i) {
    for (std::size_t j = i + 1; j < roster.size(); ++j) {
      seeds[PairKey(roster[i].address, roster[j].address)] =
          pairwise_seed(roster[i], roster[j]);
    }
  }
  return seeds;
}

RingVector prg_stream(std::uint64_t seed, std::size_t dim) {
  SplitMix64 rng(seed);
  RingVector out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = RingElement{rng.next()};
  return out;
}

RingVector expand_mask(Address owner, std::span<const DoIdentity> roster,
                       const PairwiseSeeds& seeds, std::size_t dim) {
  bool found = false;
  for (const auto& id : roster) found = found || id.address == owner;
  if (!found) {
    throw RosterError("expand_mask: owner " + std::to_string(owner) +
                      " not in roster");
  }
  RingVector z(dim);
  for (const auto& peer : roster) {
    if (peer.address == owner) continue;
    auto it = seeds.find(PairKey(owner, peer.address));
    if (it == seeds.end()) {
      throw ProtocolError("expand_mask: missing pairwise seed for (" +
                          std::to_string(owner) + ", " +
                          std::to_string(peer.address) + ")");
    }
    const RingVector stream = prg_stream(it->second, dim);
    if (peer.address > owner) {
      z = ring_add(z, stream);
    } else {
      z = ring_add(z, ring_neg(stream));
    }
  }
  return z;
}

RingVector mask_model(const RingVector& w, const RingVector& z) {
  return ring_add(w, z);
}

}  // namespace secmarket
