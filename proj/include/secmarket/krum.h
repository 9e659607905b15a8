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

#ifndef SECMARKET_KRUM_H_
#define SECMARKET_KRUM_H_

#include <map>
#include <vector>

namespace secmarket {

// Distance-based outlier suppression over per-round aggregates (multi-Krum,
// Blanchard et al.). Candidates are the decoded real vectors A_r keyed by
// round index; mu is the assumed fraction of corrupted candidates; m is the
// number of candidates to keep.
struct KrumInput {
  std::map<int, std::vector<double>> candidates;
  double mu = 0.0;
  int m = 1;
};

struct KrumScore {
  int round = 0;
  double score = 0.0;
};

// Neighbor count for one scoring pass: |T| - floor(mu * p_size) - 2. The
// candidate itself is never among its own neighbors; floor resolves
// fractional mu * |P|.
int krum_neighbor_count(int t_size, double mu, int p_size);

// Largest m for which every one of the m scoring passes has at least one
// neighbor: m <= |P| - floor(mu * |P|) - 2.
int krum_max_feasible_m(int p_size, double mu);

// Sum of squared l2 distances from candidates[r] to its
// krum_neighbor_count(|active|, mu, p_size) nearest members of `active`
// (excluding r). Distance and score ties break toward the lower round index.
// Throws ConstraintError if the neighbor count is < 1.
KrumScore score_one(int r, const std::vector<int>& active,
                    const std::map<int, std::vector<double>>& candidates,
                    double mu, int p_size);

// m iterations of: score every remaining candidate, remove the argmin from
// the active set and append it to the selection. Returns the selection in
// removal order. Deterministic; ties break toward the lower round index.
// Throws ConstraintError if m is infeasible, DimensionError on mixed
// candidate dimensions.
std::vector<int> m_krum(const KrumInput& input);

}  // namespace secmarket

#endif  // SECMARKET_KRUM_H_
