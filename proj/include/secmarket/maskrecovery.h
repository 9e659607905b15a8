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

#ifndef SECMARKET_MASKRECOVERY_H_
#define SECMARKET_MASKRECOVERY_H_

#include <cstdint>
#include <span>
#include <vector>

namespace secmarket {

// Multiplicative/affine gradient-encryption scheme with exact recovery of
// the weighted aggregate. Client k publishes, per layer l,
//
//   E_k^(l) = (1 / R^(l)) o grad_k^(l) + r^T sigma_tilde_k^(l) - v beta_k^(l)
//
// and the recoverer, holding the bundle, computes
//
//   G^(l) = R^(l) o ( sum_k w_k E_k^(l) - sum_i gamma_i sigma_i^(l)
//                     + v beta^(l) )
//         = sum_k w_k grad_k^(l)
//
// where sigma_i^(l) = sum_k w_k r_a_i sigma_tilde_{k,i}^(l),
// beta^(l) = sum_k w_k beta_k^(l), and r_i = gamma_i * r_a_i makes the mask
// terms telescope. This scheme is multiplicative (it divides by R), so it
// runs in real arithmetic, not in the contract's ring; it is exercised by
// the test suite and the verify-recovery CLI command and is not part of the
// contract flow.
struct MaskBundle {
  std::vector<std::size_t> layer_dims;
  // R^(l): elementwise mask per layer, strictly positive by construction.
  std::vector<std::vector<double>> layer_mask;
  std::vector<double> gamma;  // length n_mask
  std::vector<double> r_a;    // length n_mask
  std::vector<double> r;      // derived: r[i] = gamma[i] * r_a[i]
  // sigma_tilde[k][l]: n_mask x layer_dims[l], row-major.
  std::vector<std::vector<std::vector<double>>> sigma_tilde;
  // beta[k][l]: layer_dims[l].
  std::vector<std::vector<std::vector<double>>> beta;
  double v = 0.0;
  std::vector<double> weights;  // M_k / M, positive, sums to 1

  std::size_t n_clients() const { return weights.size(); }
  std::size_t n_mask() const { return gamma.size(); }
};

// Per-layer real arrays; grads[l] has layer_dims[l] elements.
using LayerGrads = std::vector<std::vector<double>>;

// Seeded instantiation: R^(l) uniform in [0.5, 2], gamma/r_a/sigma_tilde/
// beta/v uniform in [-1, 1], weights a positive simplex draw; the derived
// fields (r) come from the consistency relation, never sampled.
MaskBundle gen_bundle(std::size_t n_clients, std::size_t n_mask,
                      std::span<const std::size_t> layer_shapes,
                      std::uint64_t seed);

// Client k's encrypted gradient. Throws DimensionError if grad_k does not
// match the bundle's layer shapes, RangeError on a bad client index.
LayerGrads encrypt_gradient(const LayerGrads& grad_k, const MaskBundle& bundle,
                            std::size_t k);

// Weighted combination sum_k w_k g_k; convenience for building the
// encrypted aggregate.
LayerGrads weighted_sum(std::span<const LayerGrads> grads,
                        std::span<const double> weights);

// Recovers the weighted aggregate gradient from the encrypted aggregate.
// The mask term is evaluated through the telescoped route
// sum_k w_k r^T sigma_tilde_k^(l). Throws ConsistencyError if the bundle
// violates its construction invariants.
LayerGrads recover(const LayerGrads& encrypted_aggregate,
                   const MaskBundle& bundle);

}  // namespace secmarket

#endif  // SECMARKET_MASKRECOVERY_H_
