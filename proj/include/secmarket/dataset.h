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

#ifndef SECMARKET_DATASET_H_
#define SECMARKET_DATASET_H_

#include <cstdint>
#include <string>

#include "secmarket/model.h"

namespace secmarket {

// Dataset file format: plain text, one sample per line, comma-separated
// feature values followed by an integer label. Throws DataError on parse
// failures, inconsistent feature dimensions, or negative labels.
Dataset load_dataset(const std::string& path, const std::string& owner_tag);

// Divides every feature by `divisor`; used to bring raw pixel intensities
// into the unit range.
void scale_features(Dataset& data, double divisor);

// Seeded Gaussian mixture: `classes` means drawn uniformly in [-1, 1]^dim,
// samples = mean + noise_sigma * N(0, I), labels cycle through the classes.
Dataset synthetic_mixture(std::size_t n, int dim, int classes,
                          std::uint64_t seed, double noise_sigma = 0.35);

}  // namespace secmarket

#endif  // SECMARKET_DATASET_H_
