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

#ifndef SECMARKET_MODEL_H_
#define SECMARKET_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "secmarket/fixedpoint.h"

namespace secmarket {

// Dense multilayer perceptron trained with plain SGD on softmax
// cross-entropy. Real-valued throughout; fixed-point conversion happens only
// at the contract boundary.
//
// Aggregation weights: with heterogeneous datasets each contributor k would
// carry weight p_k = M_k / sum_j M_j. The contract requires every
// contributor to train on exactly M0 points, so p_k reduces to the uniform
// 1/N applied at decode time.

enum class Activation { kTanh, kRelu, kLinear };

struct LayerSpec {
  int in = 0;
  int out = 0;
  Activation act = Activation::kTanh;
};

// Hidden layers tanh, output layer linear (softmax lives in the loss).
std::vector<LayerSpec> mlp_arch(std::span<const int> widths);

struct Layer {
  std::string name;
  int in = 0;
  int out = 0;
  Activation act = Activation::kLinear;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out
};

struct ModelParams {
  std::vector<Layer> layers;

  std::size_t param_count() const;
  // Layer order, weights row-major then bias. unflatten is the exact
  // inverse; both round-trip bit-exactly.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
};

struct Sample {
  std::vector<double> x;
  int y = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::string owner_tag;

  std::size_t size() const { return samples.size(); }
};

struct TrainSpec {
  int epochs = 1;
  int batch_size = 1;
  double lr = 0.05;
  std::uint64_t seed = 0;
};

// Deterministic initialization: weights uniform in +-sqrt(6/(in+out)) per
// layer (Glorot), biases zero. Throws ConfigError on an empty arch.
ModelParams init_model(std::span<const LayerSpec> arch, std::uint64_t seed);

// Splits off the trailing `public_layers` layers: (private, public).
// combine_model(private, public) == original, exactly.
// Throws ConfigError if public_layers is outside [0, layer count].
std::pair<ModelParams, ModelParams> split_model(const ModelParams& model,
                                                int public_layers);

// Concatenation; validates that the parts chain shape-wise.
ModelParams combine_model(const ModelParams& private_part,
                          const ModelParams& public_part);

// Mean cross-entropy gradient over the batch, flattened over all layers
// (backpropagation). Throws DimensionError on input shape mismatch,
// NoDataError on an empty batch.
std::vector<double> gradient(const ModelParams& model,
                             std::span<const Sample> batch);

// Mean cross-entropy loss over the dataset.
double dataset_loss(const ModelParams& model, const Dataset& data);

// Contributor-side training: `spec.epochs` of seeded mini-batch SGD on the
// first min_data_points samples, updating only the public part. Contributors
// hold no private weights; the published public vector is trained as the
// tail of the fixed reference extractor `reference_private`. Returns the
// updated public part. Throws DataError if the dataset is smaller than
// min_data_points.
ModelParams local_train(const ModelParams& public_part,
                        const ModelParams& reference_private,
                        const Dataset& data, const TrainSpec& spec,
                        std::uint64_t min_data_points);

// Model-owner update: decodes each accepted aggregate with divisor
// group_size, averages over the accepted set in real arithmetic, and
// reshapes into the public layers. Throws NoDataError if `selected` is
// empty, DimensionError on size mismatch.
ModelParams apply_update(std::span<const RingVector> selected, int group_size,
                         const ModelParams& public_template);

// Concatenates the private part with the updated public part, then runs
// spec.epochs of full-model SGD on the owner's data (spec.epochs == 0 means
// pure concatenation).
ModelParams combine_and_adapt(const ModelParams& private_part,
                              const ModelParams& public_updated,
                              const Dataset& owner_data,
                              const TrainSpec& spec);

// Fraction of argmax-correct predictions; ties resolve to the lowest class.
double evaluate(const ModelParams& model, const Dataset& testset);

// Class probabilities for one input (softmax over the network output).
std::vector<double> predict(const ModelParams& model,
                            std::span<const double> x);

}  // namespace secmarket

#endif  // SECMARKET_MODEL_H_
