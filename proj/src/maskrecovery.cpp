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

#include "secmarket/maskrecovery.h"

#include <cmath>
#include <string>

#include "secmarket/errors.h"
#include "secmarket/prng.h"

namespace secmarket {

MaskBundle gen_bundle(std::size_t n_clients, std::size_t n_mask,
                      std::span<const std::size_t> layer_shapes,
                      std::uint64_t seed) {
  if (n_clients < 1 || n_mask < 1 || layer_shapes.empty()) {
    throw ConfigError("gen_bundle: need n_clients >= 1, n_mask >= 1 and at "
                      "least one layer");
  }
  MaskBundle b;
  b.layer_dims.assign(layer_shapes.begin(), layer_shapes.end());

  SplitMix64 rng(derive_seed(seed, stream_tag("bundle")));
  b.layer_mask.resize(b.layer_dims.size());
  for (std::size_t l = 0; l < b.layer_dims.size(); ++l) {
    b.layer_mask[l].resize(b.layer_dims[l]);
    for (auto& v : b.layer_mask[l]) v = rng.next_uniform(0.5, 2.0);
  }

  b.gamma.resize(n_mask);
  b.r_a.resize(n_mask);
  b.r.resize(n_mask);
  for (std::size_t i = 0; i < n_mask; ++i) {
    b.gamma[i] = rng.next_uniform(-1.0, 1.0);
    b.r_a[i] = rng.next_uniform(-1.0, 1.0);
    b.r[i] = b.gamma[i] * b.r_a[i];
  }

  b.sigma_tilde.resize(n_clients);
  b.beta.resize(n_clients);
  for (std::size_t k = 0; k < n_clients; ++k) {
    b.sigma_tilde[k].resize(b.layer_dims.size());
    b.beta[k].resize(b.layer_dims.size());
    for (std::size_t l = 0; l < b.layer_dims.size(); ++l) {
      b.sigma_tilde[k][l].resize(n_mask * b.layer_dims[l]);
      for (auto& v : b.sigma_tilde[k][l]) v = rng.next_uniform(-1.0, 1.0);
      b.beta[k][l].resize(b.layer_dims[l]);
      for (auto& v : b.beta[k][l]) v = rng.next_uniform(-1.0, 1.0);
    }
  }

  b.v = rng.next_uniform(-1.0, 1.0);

  // Positive simplex draw via normalized exponentials.
  b.weights.resize(n_clients);
  double total = 0.0;
  for (auto& w : b.weights) {
    w = -std::log(std::max(rng.next_unit(), 1e-12));
    total += w;
  }
  for (auto& w : b.weights) w /= total;
  return b;
}

namespace {

void check_shapes(const LayerGrads& grads, const MaskBundle& bundle,
                  const char* op) {
  if (grads.size() != bundle.layer_dims.size()) {
    throw DimensionError(std::string(op) + ": got " +
                         std::to_string(grads.size()) + " layers, expected " +
                         std::to_string(bundle.layer_dims.size()));
  }
  for (std::size_t l = 0; l < grads.size(); ++l) {
    if (grads[l].size() != bundle.layer_dims[l]) {
      throw DimensionError(std::string(op) + ": layer " + std::to_string(l) +
                           " has " + std::to_string(grads[l].size()) +
                           " elements, expected " +
                           std::to_string(bundle.layer_dims[l]));
    }
  }
}

// r^T sigma_tilde_k^(l): contracts the n_mask rows into one layer-shaped
// vector.
std::vector<double> mask_row_term(const MaskBundle& bundle, std::size_t k,
                                  std::size_t l) {
  const std::size_t dim = bundle.layer_dims[l];
  std::vector<double> term(dim, 0.0);
  const auto& st = bundle.sigma_tilde[k][l];
  for (std::size_t i = 0; i < bundle.n_mask(); ++i) {
    const double ri = bundle.r[i];
    for (std::size_t d = 0; d < dim; ++d) {
      term[d] += ri * st[i * dim + d];
    }
  }
  return term;
}

void check_consistency(const MaskBundle& bundle) {
  if (bundle.weights.empty() || bundle.gamma.empty()) {
    throw ConsistencyError("bundle has no clients or no mask rows");
  }
  if (bundle.r.size() != bundle.gamma.size() ||
      bundle.r_a.size() != bundle.gamma.size()) {
    throw ConsistencyError("bundle mask vectors have mismatched lengths");
  }
  for (std::size_t i = 0; i < bundle.r.size(); ++i) {
    if (bundle.r[i] != bundle.gamma[i] * bundle.r_a[i]) {
      throw ConsistencyError("bundle violates r = gamma * r_a at index " +
                             std::to_string(i));
    }
  }
  for (const auto& layer : bundle.layer_mask) {
    for (double v : layer) {
      if (!(v > 0.0)) {
        throw ConsistencyError("layer mask must be strictly positive");
      }
    }
  }
  double total = 0.0;
  for (double w : bundle.weights) {
    if (!(w > 0.0)) {
      throw ConsistencyError("client weights must be positive");
    }
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw ConsistencyError("client weights sum to " + std::to_string(total) +
                           ", expected 1");
  }
}

}  // namespace

LayerGrads encrypt_gradient(const LayerGrads& grad_k, const MaskBundle& bundle,
                            std::size_t k) {
  if (k >= bundle.n_clients()) {
    throw RangeError("encrypt_gradient: client " + std::to_string(k) +
                     " outside [0, " + std::to_string(bundle.n_clients()) +
                     ")");
  }
  check_shapes(grad_k, bundle, "encrypt_gradient");
  LayerGrads out(bundle.layer_dims.size());
  for (std::size_t l = 0; l < bundle.layer_dims.size(); ++l) {
    const std::size_t dim = bundle.layer_dims[l];
    const auto row_term = mask_row_term(bundle, k, l);
    out[l].resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      out[l][d] = grad_k[l][d] / bundle.layer_mask[l][d] + row_term[d] -
                  bundle.v * bundle.beta[k][l][d];
    }
  }
  return out;
}

LayerGrads weighted_sum(std::span<const LayerGrads> grads,
                        std::span<const double> weights) {
  if (grads.empty() || grads.size() != weights.size()) {
    throw DimensionError("weighted_sum: need one weight per gradient set");
  }
  LayerGrads out = grads[0];
  for (auto& layer : out) {
    for (auto& v : layer) v = 0.0;
  }
  for (std::size_t k = 0; k < grads.size(); ++k) {
    for (std::size_t l = 0; l < out.size(); ++l) {
      if (grads[k][l].size() != out[l].size()) {
        throw DimensionError("weighted_sum: mismatched layer shapes");
      }
      for (std::size_t d = 0; d < out[l].size(); ++d) {
        out[l][d] += weights[k] * grads[k][l][d];
      }
    }
  }
  return out;
}

LayerGrads recover(const LayerGrads& encrypted_aggregate,
                   const MaskBundle& bundle) {
  check_consistency(bundle);
  check_shapes(encrypted_aggregate, bundle, "recover");
  LayerGrads out(bundle.layer_dims.size());
  for (std::size_t l = 0; l < bundle.layer_dims.size(); ++l) {
    const std::size_t dim = bundle.layer_dims[l];
    // sum_i gamma_i sigma_i^(l) evaluated through the telescoped identity
    // sum_k w_k r^T sigma_tilde_k^(l).
    std::vector<double> mask_term(dim, 0.0);
    std::vector<double> beta_agg(dim, 0.0);
    for (std::size_t k = 0; k < bundle.n_clients(); ++k) {
      const auto row_term = mask_row_term(bundle, k, l);
      for (std::size_t d = 0; d < dim; ++d) {
        mask_term[d] += bundle.weights[k] * row_term[d];
        beta_agg[d] += bundle.weights[k] * bundle.beta[k][l][d];
      }
    }
    out[l].resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      out[l][d] = bundle.layer_mask[l][d] *
                  (encrypted_aggregate[l][d] - mask_term[d] +
                   bundle.v * beta_agg[d]);
    }
  }
  return out;
}

}  // namespace secmarket
