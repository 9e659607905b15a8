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

#ifndef SECMARKET_GAS_H_
#define SECMARKET_GAS_H_

#include <array>
#include <cstdint>

namespace secmarket {

// Operation-count proxy for transaction gas. Units:
//   Register          1 per registration
//   PubKeyInteract    1 per public key uploaded (N per assembled round)
//   ModelAggregate    1 per ring element stored into a round's aggregate
//   OutlierSuppression 1 per squared-difference term, i.e. dim units per
//                      entry of the |T| x |T| distance matrix per iteration
enum class GasPhase : int {
  kRegister = 0,
  kPubKeyInteract = 1,
  kModelAggregate = 2,
  kOutlierSuppression = 3,
};

inline constexpr int kGasPhaseCount = 4;

const char* to_string(GasPhase phase);

// Monotone per-phase counters; reset only at deploy (construction).
class GasMeter {
 public:
  void charge(GasPhase phase, std::uint64_t units) {
    counts_[static_cast<int>(phase)] += units;
  }

  std::uint64_t count(GasPhase phase) const {
    return counts_[static_cast<int>(phase)];
  }

  std::uint64_t total() const {
    std::uint64_t sum = 0;
    for (auto c : counts_) sum += c;
    return sum;
  }

  const std::array<std::uint64_t, kGasPhaseCount>& counts() const {
    return counts_;
  }

 private:
  std::array<std::uint64_t, kGasPhaseCount> counts_{};
};

inline const char* to_string(GasPhase phase) {
  switch (phase) {
    case GasPhase::kRegister:
      return "Register";
    case GasPhase::kPubKeyInteract:
      return "PubKeyInteract";
    case GasPhase::kModelAggregate:
      return "ModelAggregate";
    case GasPhase::kOutlierSuppression:
      return "OutlierSuppression";
  }
  return "?";
}

}  // namespace secmarket

#endif  // SECMARKET_GAS_H_
