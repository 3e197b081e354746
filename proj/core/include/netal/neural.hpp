// Copyright 2026 The netal Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "netal/common.hpp"

namespace netal {

// Samples are stored one per column: rows = features, cols = samples.
using FeatureMatrix = Eigen::MatrixXd;

enum class Activation { kRelu, kTanh };

struct NetworkSpec {
  std::vector<std::size_t> layer_sizes;  // [F, h1, ..., 1]
  double dropout_rate = 0.0;
  Activation activation = Activation::kRelu;
  double weight_init_scale = 1.0;

  void validate() const;
  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t layer_count() const { return layer_sizes.size() - 1; }
  double keep_probability() const { return 1.0 - dropout_rate; }
};

struct Layer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;
};

struct NetworkParams {
  std::vector<Layer> layers;

  bool all_finite() const;
  std::size_t parameter_count() const;
  // Visits every scalar in layer order, weights (column-major) before bias.
  template <typename Fn>
  void for_each(Fn&& fn) {
    for (auto& l : layers) {
      for (Eigen::Index i = 0; i < l.weights.size(); ++i) fn(l.weights.data()[i]);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) fn(l.bias.data()[i]);
    }
  }
  bool operator==(const NetworkParams& other) const;
};

using Gradients = NetworkParams;

// One keep/drop vector per hidden layer, entries in {0, 1}.
struct DropoutMask {
  std::vector<Eigen::VectorXd> keep;

  static DropoutMask sample(const NetworkSpec& spec, Rng& rng);
  static DropoutMask all_kept(const NetworkSpec& spec);
};

struct ForwardCache {
  double output = 0.0;
  // activations[0] is the input; activations[l] is the (masked, rescaled)
  // output of hidden layer l. preactivations[l] feeds layer l+1's activation.
  std::vector<Eigen::VectorXd> activations;
  std::vector<Eigen::VectorXd> preactivations;
  std::optional<DropoutMask> mask;
};

NetworkParams init_params(const NetworkSpec& spec, std::uint64_t rng_seed);
NetworkParams zeros_like(const NetworkParams& params);

// Hidden activations are multiplied by the mask and divided by the keep
// probability when a mask is given; without one the pass is deterministic.
ForwardCache forward(const NetworkParams& params, const NetworkSpec& spec,
                     std::span<const double> x, const DropoutMask* mask = nullptr);

double predict(const NetworkParams& params, const NetworkSpec& spec, std::span<const double> x);

// Batched pass over the columns of `inputs`. A mask, when given, is shared by
// every column.
Eigen::VectorXd predict_batch(const NetworkParams& params, const NetworkSpec& spec,
                              const FeatureMatrix& inputs, const DropoutMask* mask = nullptr);

// Gradient of (output - target)^2 through the cached pass.
Gradients backward(const NetworkParams& params, const NetworkSpec& spec,
                   const ForwardCache& cache, double target);

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  NetworkParams first_moment;
  NetworkParams second_moment;
  std::uint64_t step = 0;

  static AdamState zeros_like(const NetworkParams& params);
};

void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state,
               const AdamHyper& hyper);

struct TrainOptions {
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  AdamHyper adam;
  std::uint64_t seed = 0;
};

struct TrainResult {
  NetworkParams params;
  double final_mse = 0.0;  // maskless, over the whole training set
};

// Mini-batch Adam on mean squared error with a fresh dropout mask per example.
// When `state` is given it is used and updated in place; otherwise a fresh
// optimizer state is created.
TrainResult train(NetworkParams params, const NetworkSpec& spec, const FeatureMatrix& inputs,
                  std::span<const double> targets, const TrainOptions& options,
                  AdamState* state = nullptr);

// Mean of per-example gradients for a mini-batch, each example with its own mask.
Gradients batch_gradient(const NetworkParams& params, const NetworkSpec& spec,
                         const FeatureMatrix& inputs, std::span<const double> targets,
                         std::span<const DropoutMask> masks);

double mean_squared_error(const NetworkParams& params, const NetworkSpec& spec,
                          const FeatureMatrix& inputs, std::span<const double> targets);

void save_params(const NetworkParams& params, const std::filesystem::path& path);
NetworkParams load_params(const std::filesystem::path& path);

}  // namespace netal
