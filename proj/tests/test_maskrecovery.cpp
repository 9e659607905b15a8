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
#include <vector>

#include "doctest.h"
#include "secmarket/errors.h"
#include "secmarket/prng.h"

using namespace secmarket;

namespace {

LayerGrads random_grads(const MaskBundle& bundle, std::uint64_t seed) {
  SplitMix64 rng(seed);
  LayerGrads g(bundle.layer_dims.size());
  for (std::size_t l = 0; l < g.size(); ++l) {
    g[l].resize(bundle.layer_dims[l]);
    for (auto& v : g[l]) v = rng.next_uniform(-1.0, 1.0);
  }
  return g;
}

// Long-double re-evaluation of the encryption formula, independent of the
// library path.
LayerGrads encrypt_reference(const LayerGrads& grad, const MaskBundle& b,
                             std::size_t k) {
  LayerGrads out(b.layer_dims.size());
  for (std::size_t l = 0; l < b.layer_dims.size(); ++l) {
    const std::size_t dim = b.layer_dims[l];
    out[l].resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      long double acc = static_cast<long double>(grad[l][d]) /
                        static_cast<long double>(b.layer_mask[l][d]);
      for (std::size_t i = 0; i < b.n_mask(); ++i) {
        acc += static_cast<long double>(b.r[i]) *
               static_cast<long double>(b.sigma_tilde[k][l][i * dim + d]);
      }
      acc -= static_cast<long double>(b.v) *
             static_cast<long double>(b.beta[k][l][d]);
      out[l][d] = static_cast<double>(acc);
    }
  }
  return out;
}

MaskBundle trivial_bundle(std::size_t n_clients,
                          std::span<const std::size_t> shapes) {
  // Ones for the multiplicative mask, zeros everywhere else: encryption and
  // recovery become exact identities.
  MaskBundle b;
  b.layer_dims.assign(shapes.begin(), shapes.end());
  b.layer_mask.resize(shapes.size());
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    b.layer_mask[l].assign(shapes[l], 1.0);
  }
  b.gamma = {0.5};
  b.r_a = {0.25};
  b.r = {0.125};
  b.sigma_tilde.resize(n_clients);
  b.beta.resize(n_clients);
  for (std::size_t k = 0; k < n_clients; ++k) {
    b.sigma_tilde[k].resize(shapes.size());
    b.beta[k].resize(shapes.size());
    for (std::size_t l = 0; l < shapes.size(); ++l) {
      b.sigma_tilde[k][l].assign(shapes[l], 0.0);
      b.beta[k][l].assign(shapes[l], 0.0);
    }
  }
  b.v = 0.0;
  b.weights.assign(n_clients, 1.0 / static_cast<double>(n_clients));
  return b;
}

}  // namespace

TEST_CASE("gen_bundle: simplex weights, positive masks, determinism") {
  const std::vector<std::size_t> shapes{8, 16, 4};
  const MaskBundle a = gen_bundle(5, 3, shapes, 99);
  double total = 0.0;
  for (double w : a.weights) {
    CHECK(w > 0.0);
    total += w;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& layer : a.layer_mask) {
    for (double v : layer) {
      CHECK(v >= 0.5);
      CHECK(v <= 2.0);
    }
  }
  for (std::size_t i = 0; i < a.n_mask(); ++i) {
    CHECK(a.r[i] == a.gamma[i] * a.r_a[i]);
  }
  const MaskBundle b = gen_bundle(5, 3, shapes, 99);
  CHECK(a.r == b.r);
  CHECK(a.sigma_tilde == b.sigma_tilde);
  const MaskBundle c = gen_bundle(5, 3, shapes, 100);
  CHECK_FALSE(a.r == c.r);
}

TEST_CASE("encryption with trivial masks is the identity") {
  const std::vector<std::size_t> shapes{6, 3};
  const MaskBundle b = trivial_bundle(2, shapes);
  const LayerGrads g = random_grads(b, 5);
  CHECK(encrypt_gradient(g, b, 0) == g);
}

TEST_CASE("zero gradient encrypts to the pure mask term") {
  const std::vector<std::size_t> shapes{4};
  MaskBundle b = gen_bundle(3, 2, shapes, 7);
  LayerGrads zero(1);
  zero[0].assign(4, 0.0);
  const LayerGrads enc = encrypt_gradient(zero, b, 1);
  for (std::size_t d = 0; d < 4; ++d) {
    double expected = -b.v * b.beta[1][0][d];
    for (std::size_t i = 0; i < b.n_mask(); ++i) {
      expected += b.r[i] * b.sigma_tilde[1][0][i * 4 + d];
    }
    CHECK(enc[0][d] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("encryption matches the extended-precision reference") {
  const std::vector<std::size_t> shapes{8, 32, 5};
  const MaskBundle b = gen_bundle(4, 4, shapes, 11);
  for (std::size_t k = 0; k < 4; ++k) {
    const LayerGrads g = random_grads(b, derive_seed(12, k));
    const LayerGrads enc = encrypt_gradient(g, b, k);
    const LayerGrads ref = encrypt_reference(g, b, k);
    for (std::size_t l = 0; l < shapes.size(); ++l) {
      for (std::size_t d = 0; d < shapes[l]; ++d) {
        CHECK(enc[l][d] == doctest::Approx(ref[l][d]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("single client with trivial masks recovers its gradient exactly") {
  const std::vector<std::size_t> shapes{5, 2};
  const MaskBundle b = trivial_bundle(1, shapes);
  const LayerGrads g = random_grads(b, 21);
  const LayerGrads enc = encrypt_gradient(g, b, 0);
  CHECK(recover(enc, b) == g);
}

TEST_CASE("three clients recover the weighted aggregate within 1e-9") {
  const std::vector<std::size_t> shapes{16, 8};
  const MaskBundle b = gen_bundle(3, 3, shapes, 31);
  std::vector<LayerGrads> grads, encrypted;
  for (std::size_t k = 0; k < 3; ++k) {
    grads.push_back(random_grads(b, derive_seed(32, k)));
    encrypted.push_back(encrypt_gradient(grads.back(), b, k));
  }
  const LayerGrads recovered =
      recover(weighted_sum(encrypted, b.weights), b);
  const LayerGrads expected = weighted_sum(grads, b.weights);
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    for (std::size_t d = 0; d < shapes[l]; ++d) {
      const double denom = std::max(std::fabs(expected[l][d]), 1e-12);
      CHECK(std::fabs(recovered[l][d] - expected[l][d]) / denom < 1e-9);
    }
  }
}

TEST_CASE("zero weighted-aggregate gradient recovers to zero") {
  const std::vector<std::size_t> shapes{12};
  MaskBundle b = gen_bundle(2, 2, shapes, 41);
  b.weights = {0.5, 0.5};
  LayerGrads g0 = random_grads(b, 42);
  LayerGrads g1 = g0;
  for (auto& v : g1[0]) v = -v;
  std::vector<LayerGrads> encrypted{encrypt_gradient(g0, b, 0),
                                    encrypt_gradient(g1, b, 1)};
  const LayerGrads recovered =
      recover(weighted_sum(encrypted, b.weights), b);
  for (double v : recovered[0]) CHECK(std::fabs(v) < 1e-9);
}

TEST_CASE("recovery is linear in the gradients") {
  const std::vector<std::size_t> shapes{8};
  const MaskBundle b = gen_bundle(3, 2, shapes, 51);
  auto run = [&](const std::vector<LayerGrads>& grads) {
    std::vector<LayerGrads> enc;
    for (std::size_t k = 0; k < grads.size(); ++k) {
      enc.push_back(encrypt_gradient(grads[k], b, k));
    }
    return recover(weighted_sum(enc, b.weights), b);
  };
  std::vector<LayerGrads> ga, gb, gsum;
  for (std::size_t k = 0; k < 3; ++k) {
    ga.push_back(random_grads(b, derive_seed(52, k)));
    gb.push_back(random_grads(b, derive_seed(53, k)));
    LayerGrads s = ga.back();
    for (std::size_t d = 0; d < s[0].size(); ++d) s[0][d] += gb.back()[0][d];
    gsum.push_back(std::move(s));
  }
  const LayerGrads ra = run(ga), rb = run(gb), rsum = run(gsum);
  for (std::size_t d = 0; d < shapes[0]; ++d) {
    CHECK(rsum[0][d] == doctest::Approx(ra[0][d] + rb[0][d]).epsilon(1e-9));
  }
}

TEST_CASE("mask-term identity: gamma-weighted rows equal the telescoped sum") {
  const std::vector<std::size_t> shapes{10, 6};
  const MaskBundle b = gen_bundle(4, 3, shapes, 61);
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const std::size_t dim = shapes[l];
    // Route 1: aggregate rows sigma_i = sum_k w_k r_a_i sigma_tilde_{k,i},
    // then contract with gamma.
    std::vector<double> route1(dim, 0.0);
    for (std::size_t i = 0; i < b.n_mask(); ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        double sigma_id = 0.0;
        for (std::size_t k = 0; k < b.n_clients(); ++k) {
          sigma_id += b.weights[k] * b.r_a[i] * b.sigma_tilde[k][l][i * dim + d];
        }
        route1[d] += b.gamma[i] * sigma_id;
      }
    }
    // Route 2: telescoped form sum_k w_k r^T sigma_tilde_k.
    std::vector<double> route2(dim, 0.0);
    for (std::size_t k = 0; k < b.n_clients(); ++k) {
      for (std::size_t i = 0; i < b.n_mask(); ++i) {
        for (std::size_t d = 0; d < dim; ++d) {
          route2[d] += b.weights[k] * b.r[i] * b.sigma_tilde[k][l][i * dim + d];
        }
      }
    }
    for (std::size_t d = 0; d < dim; ++d) {
      CHECK(route1[d] == doctest::Approx(route2[d]).epsilon(1e-12));
    }
  }
}

TEST_CASE("inconsistent bundles are rejected") {
  const std::vector<std::size_t> shapes{4};
  MaskBundle broken = gen_bundle(2, 2, shapes, 71);
  broken.r[0] += 1e-3;  // violates r = gamma * r_a
  LayerGrads agg(1);
  agg[0].assign(4, 0.0);
  CHECK_THROWS_AS(recover(agg, broken), ConsistencyError);

  MaskBundle negative = gen_bundle(2, 2, shapes, 72);
  negative.layer_mask[0][1] = 0.0;
  CHECK_THROWS_AS(recover(agg, negative), ConsistencyError);

  MaskBundle unbalanced = gen_bundle(2, 2, shapes, 73);
  unbalanced.weights[0] += 0.1;
  CHECK_THROWS_AS(recover(agg, unbalanced), ConsistencyError);

  MaskBundle bundle = gen_bundle(2, 2, shapes, 74);
  LayerGrads wrong(1);
  wrong[0].assign(3, 0.0);
  CHECK_THROWS_AS(encrypt_gradient(wrong, bundle, 0), DimensionError);
  CHECK_THROWS_AS(encrypt_gradient(agg, bundle, 5), RangeError);
}
