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

#include "secmarket/dataset.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "secmarket/errors.h"
#include "secmarket/prng.h"

namespace secmarket {

Dataset load_dataset(const std::string& path, const std::string& owner_tag) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("load_dataset: cannot open " + path);
  }
  Dataset data;
  data.owner_tag = owner_tag;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        values.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw DataError("load_dataset: " + path + ":" +
                        std::to_string(line_no) + ": bad field '" + field +
                        "'");
      }
    }
    if (values.size() < 2) {
      throw DataError("load_dataset: " + path + ":" +
                      std::to_string(line_no) +
                      ": need at least one feature and a label");
    }
    Sample s;
    s.y = static_cast<int>(values.back());
    if (s.y < 0 || static_cast<double>(s.y) != values.back()) {
      throw DataError("load_dataset: " + path + ":" +
                      std::to_string(line_no) +
                      ": label must be a non-negative integer");
    }
    values.pop_back();
    if (dim == 0) {
      dim = values.size();
    } else if (values.size() != dim) {
      throw DataError("load_dataset: " + path + ":" +
                      std::to_string(line_no) + ": feature dim " +
                      std::to_string(values.size()) + ", expected " +
                      std::to_string(dim));
    }
    s.x = std::move(values);
    data.samples.push_back(std::move(s));
  }
  if (data.samples.empty()) {
    throw DataError("load_dataset: " + path + " has no samples");
  }
  return data;
}

void scale_features(Dataset& data, double divisor) {
  if (divisor == 0.0) {
    throw RangeError("scale_features: divisor must be nonzero");
  }
  for (auto& s : data.samples) {
    for (auto& v : s.x) v /= divisor;
  }
}

Dataset synthetic_mixture(std::size_t n, int dim, int classes,
                          std::uint64_t seed, double noise_sigma) {
  if (dim < 1 || classes < 2) {
    throw ConfigError("synthetic_mixture: need dim >= 1 and classes >= 2");
  }
  std::vector<std::vector<double>> means(static_cast<std::size_t>(classes));
  SplitMix64 mean_rng(derive_seed(seed, stream_tag("means")));
  for (auto& mean : means) {
    mean.resize(static_cast<std::size_t>(dim));
    for (auto& v : mean) v = mean_rng.next_uniform(-1.0, 1.0);
  }
  Dataset data;
  data.owner_tag = "synthetic";
  SplitMix64 rng(derive_seed(seed, stream_tag("samples")));
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.y = static_cast<int>(i % static_cast<std::size_t>(classes));
    s.x = means[static_cast<std::size_t>(s.y)];
    for (auto& v : s.x) {
      // Box-Muller; both uniforms drawn from the same stream.
      const double u1 = std::max(rng.next_unit(), 1e-12);
      const double u2 = rng.next_unit();
      v += noise_sigma * std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
    }
    data.samples.push_back(std::move(s));
  }
  return data;
}

}  // namespace secmarket
