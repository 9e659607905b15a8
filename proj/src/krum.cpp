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

#include "secmarket/krum.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "secmarket/errors.h"

namespace secmarket {

int krum_neighbor_count(int t_size, double mu, int p_size) {
  return t_size - static_cast<int>(std::floor(mu * p_size)) - 2;
}

int krum_max_feasible_m(int p_size, double mu) {
  // Neighbor count at pass i is (p_size - i) - floor(mu*p_size) - 2; the
  // tightest pass is the last one, i = m - 1.
  return p_size - static_cast<int>(std::floor(mu * p_size)) - 2;
}

namespace {

// Squared l2 distance, accumulated in extended precision.
long double squared_distance(const std::vector<double>& a,
                             const std::vector<double>& b) {
  long double sum = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d =
        static_cast<long double>(a[i]) - static_cast<long double>(b[i]);
    sum += d * d;
  }
  return sum;
}

}  // namespace

KrumScore score_one(int r, const std::vector<int>& active,
                    const std::map<int, std::vector<double>>& candidates,
                    double mu, int p_size) {
  const int neighbors =
      krum_neighbor_count(static_cast<int>(active.size()), mu, p_size);
  if (neighbors < 1) {
    throw ConstraintError(
        "score_one: neighbor count " + std::to_string(neighbors) +
        " < 1 (|T|=" + std::to_string(active.size()) +
        ", mu=" + std::to_string(mu) + ", |P|=" + std::to_string(p_size) + ")");
  }
  const auto& self = candidates.at(r);
  std::vector<std::pair<long double, int>> dists;
  dists.reserve(active.size());
  for (int peer : active) {
    if (peer == r) continue;
    dists.emplace_back(squared_distance(self, candidates.at(peer)), peer);
  }
  // Ascending by distance, ties toward the lower round index.
  std::sort(dists.begin(), dists.end());
  long double sum = 0.0L;
  for (int i = 0; i < neighbors; ++i) sum += dists[static_cast<std::size_t>(i)].first;
  return KrumScore{r, static_cast<double>(sum)};
}

std::vector<int> m_krum(const KrumInput& input) {
  const int p_size = static_cast<int>(input.candidates.size());
  if (input.m < 1 || input.m > p_size) {
    throw ConstraintError("m_krum: m=" + std::to_string(input.m) +
                          " outside [1, " + std::to_string(p_size) + "]");
  }
  std::size_t dim = input.candidates.begin()->second.size();
  for (const auto& [r, v] : input.candidates) {
    if (v.size() != dim) {
      throw DimensionError("m_krum: candidate " + std::to_string(r) +
                           " has dim " + std::to_string(v.size()) +
                           ", expected " + std::to_string(dim));
    }
  }

  std::vector<int> active;
  active.reserve(input.candidates.size());
  for (const auto& [r, v] : input.candidates) active.push_back(r);

  std::vector<int> selected;
  selected.reserve(static_cast<std::size_t>(input.m));
  for (int pass = 0; pass < input.m; ++pass) {
    int best = -1;
    double best_score = 0.0;
    for (int r : active) {
      const KrumScore s = score_one(r, active, input.candidates, input.mu, p_size);
      // Strict < plus ascending iteration order breaks score ties toward the
      // lower round index.
      if (best == -1 || s.score < best_score) {
        best = r;
        best_score = s.score;
      }
    }
    active.erase(std::find(active.begin(), active.end(), best));
    selected.push_back(best);
  }
  return selected;
}

}  // namespace secmarket
