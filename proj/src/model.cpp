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

#include "secmarket/model.h"

#include <algorithm>
#include <cmath>

#include "secmarket/errors.h"
#include "secmarket/prng.h"

namespace secmarket {

std::vector<LayerSpec> mlp_arch(std::span<const int> widths) {
  if (widths.size() < 2) {
    throw ConfigError("mlp_arch: need at least input and output widths");
  }
  std::vector<LayerSpec> arch;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    arch.push_back(LayerSpec{widths[i], widths[i + 1],
                             last ? Activation::kLinear : Activation::kTanh});
  }
  return arch;
}

std::size_t ModelParams::param_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    n += layer.weights.size() + layer.bias.size();
  }
  return n;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (const auto& layer : layers) {
    flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

void ModelParams::unflatten(std::span<const double> flat) {
  if (flat.size() != param_count()) {
    throw DimensionError("unflatten: got " + std::to_string(flat.size()) +
                         " values, expected " +
                         std::to_string(param_count()));
  }
  std::size_t pos = 0;
  for (auto& layer : layers) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                layer.weights.size(), layer.weights.begin());
    pos += layer.weights.size();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                layer.bias.size(), layer.bias.begin());
    pos += layer.bias.size();
  }
}

ModelParams init_model(std::span<const LayerSpec> arch, std::uint64_t seed) {
  if (arch.empty()) {
    throw ConfigError("init_model: empty architecture");
  }
  ModelParams model;
  for (std::size_t i = 0; i < arch.size(); ++i) {
    const LayerSpec& spec = arch[i];
    if (spec.in < 1 || spec.out < 1) {
      throw ConfigError("init_model: layer " + std::to_string(i) +
                        " has non-positive shape");
    }
    Layer layer;
    layer.name = "dense" + std::to_string(i + 1);
    layer.in = spec.in;
    layer.out = spec.out;
    layer.act = spec.act;
    const double bound = std::sqrt(6.0 / (spec.in + spec.out));
    SplitMix64 rng(derive_seed(seed, stream_tag("layer"), i));
    layer.weights.resize(static_cast<std::size_t>(spec.in) *
                         static_cast<std::size_t>(spec.out));
    for (auto& w : layer.weights) w = rng.next_uniform(-bound, bound);
    layer.bias.assign(static_cast<std::size_t>(spec.out), 0.0);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

std::pair<ModelParams, ModelParams> split_model(const ModelParams& model,
                                                int public_layers) {
  const int n = static_cast<int>(model.layers.size());
  if (public_layers < 0 || public_layers > n) {
    throw ConfigError("split_model: public layer count " +
                      std::to_string(public_layers) + " outside [0, " +
                      std::to_string(n) + "]");
  }
  ModelParams private_part, public_part;
  for (int i = 0; i < n; ++i) {
    if (i < n - public_layers) {
      private_part.layers.push_back(model.layers[static_cast<std::size_t>(i)]);
    } else {
      public_part.layers.push_back(model.layers[static_cast<std::size_t>(i)]);
    }
  }
  return {std::move(private_part), std::move(public_part)};
}

ModelParams combine_model(const ModelParams& private_part,
                          const ModelParams& public_part) {
  ModelParams model = private_part;
  for (const auto& layer : public_part.layers) {
    if (!model.layers.empty() && model.layers.back().out != layer.in) {
      throw DimensionError("combine_model: layer widths do not chain (" +
                           std::to_string(model.layers.back().out) + " -> " +
                           std::to_string(layer.in) + ")");
    }
    model.layers.push_back(layer);
  }
  return model;
}

namespace {

double activate(Activation act, double z) {
  switch (act) {
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
    case Activation::kLinear:
      return z;
  }
  return z;
}

double activate_grad(Activation act, double a) {
  // Derivative expressed through the activation value a.
  switch (act) {
    case Activation::kTanh:
      return 1.0 - a * a;
    case Activation::kRelu:
      return a > 0.0 ? 1.0 : 0.0;
    case Activation::kLinear:
      return 1.0;
  }
  return 1.0;
}

// Activations per layer, input included as element 0.
std::vector<std::vector<double>> forward(const ModelParams& model,
                                         std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.layers.front().in) {
    throw DimensionError("forward: input dim " + std::to_string(x.size()) +
                         ", model expects " +
                         std::to_string(model.layers.front().in));
  }
  std::vector<std::vector<double>> acts;
  acts.emplace_back(x.begin(), x.end());
  for (const auto& layer : model.layers) {
    const auto& prev = acts.back();
    std::vector<double> a(static_cast<std::size_t>(layer.out));
    for (int o = 0; o < layer.out; ++o) {
      double z = layer.bias[static_cast<std::size_t>(o)];
      const double* row =
          layer.weights.data() + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) z += row[i] * prev[static_cast<std::size_t>(i)];
      a[static_cast<std::size_t>(o)] = activate(layer.act, z);
    }
    acts.push_back(std::move(a));
  }
  return acts;
}

std::vector<double> softmax(std::span<const double> logits) {
  double max_logit = logits[0];
  for (double v : logits) max_logit = std::max(max_logit, v);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - max_logit);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

void check_label(const ModelParams& model, const Sample& s) {
  if (s.y < 0 || s.y >= model.layers.back().out) {
    throw DataError("label " + std::to_string(s.y) + " outside [0, " +
                    std::to_string(model.layers.back().out) + ")");
  }
}

// Accumulates the cross-entropy gradient of one sample into grads (laid out
// like ModelParams::flatten), scaled by `scale`.
void accumulate_gradient(const ModelParams& model, const Sample& sample,
                         double scale, std::vector<double>& grads) {
  check_label(model, sample);
  const auto acts = forward(model, sample.x);
  const auto probs = softmax(acts.back());

  // delta starts as dL/dlogits = softmax - onehot (output layer is linear).
  std::vector<double> delta(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    delta[i] = probs[i] - (static_cast<int>(i) == sample.y ? 1.0 : 0.0);
  }

  // Per-layer offsets into the flat gradient vector.
  std::vector<std::size_t> offsets(model.layers.size());
  std::size_t pos = 0;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    offsets[l] = pos;
    pos += model.layers[l].weights.size() + model.layers[l].bias.size();
  }

  for (int l = static_cast<int>(model.layers.size()) - 1; l >= 0; --l) {
    const Layer& layer = model.layers[static_cast<std::size_t>(l)];
    const auto& input = acts[static_cast<std::size_t>(l)];
    double* gw = grads.data() + offsets[static_cast<std::size_t>(l)];
    double* gb = gw + layer.weights.size();
    for (int o = 0; o < layer.out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)] * scale;
      double* grow = gw + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) {
        grow[i] += d * input[static_cast<std::size_t>(i)];
      }
      gb[o] += d;
    }
    if (l == 0) break;
    // Propagate delta to the previous layer's activations.
    std::vector<double> prev_delta(static_cast<std::size_t>(layer.in), 0.0);
    for (int i = 0; i < layer.in; ++i) {
      double sum = 0.0;
      for (int o = 0; o < layer.out; ++o) {
        sum += delta[static_cast<std::size_t>(o)] *
               layer.weights[static_cast<std::size_t>(o) * layer.in + i];
      }
      prev_delta[static_cast<std::size_t>(i)] =
          sum * activate_grad(model.layers[static_cast<std::size_t>(l - 1)].act,
                              input[static_cast<std::size_t>(i)]);
    }
    delta = std::move(prev_delta);
  }
}

void sgd_step(ModelParams& model, const std::vector<double>& grads, double lr,
              std::size_t first_param, std::size_t last_param) {
  std::size_t pos = 0;
  for (auto& layer : model.layers) {
    for (auto& w : layer.weights) {
      if (pos >= first_param && pos < last_param) w -= lr * grads[pos];
      ++pos;
    }
    for (auto& b : layer.bias) {
      if (pos >= first_param && pos < last_param) b -= lr * grads[pos];
      ++pos;
    }
  }
}

void train_in_place(ModelParams& model, const Dataset& data,
                    std::size_t take_n, const TrainSpec& spec,
                    std::size_t first_param, std::size_t last_param) {
  if (spec.epochs < 0 || spec.lr < 0.0) {
    throw ConfigError("train: epochs and lr must be non-negative");
  }
  const std::size_t n = std::min(take_n, data.samples.size());
  const std::size_t batch =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(spec.batch_size, 1)), n);
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    const auto order = shuffled_indices(
        n, derive_seed(spec.seed, stream_tag("epoch"), static_cast<std::uint64_t>(epoch)));
    for (std::size_t begin = 0; begin < n; begin += batch) {
      const std::size_t end = std::min(begin + batch, n);
      std::vector<double> grads(model.param_count(), 0.0);
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        accumulate_gradient(model, data.samples[order[i]], scale, grads);
      }
      sgd_step(model, grads, spec.lr, first_param, last_param);
    }
  }
}

}  // namespace

std::vector<double> gradient(const ModelParams& model,
                             std::span<const Sample> batch) {
  if (batch.empty()) {
    throw NoDataError("gradient: empty batch");
  }
  std::vector<double> grads(model.param_count(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& sample : batch) {
    accumulate_gradient(model, sample, scale, grads);
  }
  return grads;
}

double dataset_loss(const ModelParams& model, const Dataset& data) {
  if (data.samples.empty()) {
    throw NoDataError("dataset_loss: empty dataset");
  }
  double loss = 0.0;
  for (const auto& sample : data.samples) {
    check_label(model, sample);
    const auto acts = forward(model, sample.x);
    const auto probs = softmax(acts.back());
    loss += -std::log(std::max(probs[static_cast<std::size_t>(sample.y)],
                               1e-300));
  }
  return loss / static_cast<double>(data.samples.size());
}

ModelParams local_train(const ModelParams& public_part,
                        const ModelParams& reference_private,
                        const Dataset& data, const TrainSpec& spec,
                        std::uint64_t min_data_points) {
  if (data.samples.size() < min_data_points) {
    throw DataError("local_train: dataset of " +
                    std::to_string(data.samples.size()) +
                    " samples is below the required " +
                    std::to_string(min_data_points));
  }
  ModelParams model = combine_model(reference_private, public_part);
  const std::size_t frozen = reference_private.param_count();
  train_in_place(model, data, min_data_points, spec, frozen,
                 model.param_count());
  return split_model(model, static_cast<int>(public_part.layers.size()))
      .second;
}

ModelParams apply_update(std::span<const RingVector> selected, int group_size,
                         const ModelParams& public_template) {
  if (selected.empty()) {
    throw NoDataError("apply_update: no accepted aggregation results");
  }
  const std::size_t dim = public_template.param_count();
  std::vector<double> mean(dim, 0.0);
  for (const auto& vec : selected) {
    if (vec.dim() != dim) {
      throw DimensionError("apply_update: aggregate dim " +
                           std::to_string(vec.dim()) + ", expected " +
                           std::to_string(dim));
    }
    const auto decoded =
        decode(vec, static_cast<std::uint64_t>(group_size));
    for (std::size_t i = 0; i < dim; ++i) mean[i] += decoded[i];
  }
  for (auto& v : mean) v /= static_cast<double>(selected.size());
  ModelParams updated = public_template;
  updated.unflatten(mean);
  return updated;
}

ModelParams combine_and_adapt(const ModelParams& private_part,
                              const ModelParams& public_updated,
                              const Dataset& owner_data,
                              const TrainSpec& spec) {
  ModelParams model = combine_model(private_part, public_updated);
  if (spec.epochs > 0) {
    train_in_place(model, owner_data, owner_data.samples.size(), spec, 0,
                   model.param_count());
  }
  return model;
}

double evaluate(const ModelParams& model, const Dataset& testset) {
  if (testset.samples.empty()) {
    throw DataError("evaluate: empty test set");
  }
  std::size_t correct = 0;
  for (const auto& sample : testset.samples) {
    const auto acts = forward(model, sample.x);
    const auto& logits = acts.back();
    int argmax = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
      if (logits[i] > logits[static_cast<std::size_t>(argmax)]) {
        argmax = static_cast<int>(i);
      }
    }
    if (argmax == sample.y) ++correct;
  }
  return static_cast<double>(correct) /
         static_cast<double>(testset.samples.size());
}

std::vector<double> predict(const ModelParams& model,
                            std::span<const double> x) {
  const auto acts = forward(model, x);
  return softmax(acts.back());
}

}  // namespace secmarket
