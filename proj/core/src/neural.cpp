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

#include "netal/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <string>

namespace netal {
namespace {

template <typename Derived>
void activate_inplace(Eigen::MatrixBase<Derived>& z, Activation act) {
  if (act == Activation::kRelu) {
    z = z.cwiseMax(0.0);
  } else {
    z = z.array().tanh().matrix();
  }
}

// Derivative expressed in terms of the pre-activation.
template <typename Derived>
auto activation_derivative(const Eigen::MatrixBase<Derived>& z, Activation act) {
  using Plain = typename Derived::PlainObject;
  Plain d(z.rows(), z.cols());
  if (act == Activation::kRelu) {
    d = (z.array() > 0.0).template cast<double>().matrix();
  } else {
    d = (1.0 - z.array().tanh().square()).matrix();
  }
  return d;
}

void check_input(const NetworkParams& params, const NetworkSpec& spec, std::size_t x_size) {
  if (params.layers.size() != spec.layer_count()) {
    throw DataError("network parameters do not match the NetworkSpec layer count");
  }
  if (x_size != spec.input_size()) {
    throw DataError("input has " + std::to_string(x_size) + " features, network expects " +
                    std::to_string(spec.input_size()));
  }
}

void check_mask(const NetworkSpec& spec, const DropoutMask& mask) {
  if (mask.keep.size() + 1 != spec.layer_count()) {
    throw DataError("dropout mask layer count does not match the network");
  }
  for (std::size_t l = 0; l < mask.keep.size(); ++l) {
    if (static_cast<std::size_t>(mask.keep[l].size()) != spec.layer_sizes[l + 1]) {
      throw DataError("dropout mask width does not match hidden layer " + std::to_string(l + 1));
    }
  }
}

}  // namespace

void NetworkSpec::validate() const {
  if (layer_sizes.size() < 2) throw ConfigError("network needs at least input and output layers");
  if (layer_sizes.back() != 1) throw ConfigError("network output layer must have size 1");
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw ConfigError("network layer sizes must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1)");
  }
  if (!(weight_init_scale > 0.0)) throw ConfigError("weight init scale must be positive");
}

bool NetworkParams::all_finite() const {
  return std::all_of(layers.begin(), layers.end(), [](const Layer& l) {
    return l.weights.allFinite() && l.bias.allFinite();
  });
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

bool NetworkParams::operator==(const NetworkParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = other.layers[i];
    if (a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols()) return false;
    if (a.weights != b.weights || a.bias != b.bias) return false;
  }
  return true;
}

DropoutMask DropoutMask::sample(const NetworkSpec& spec, Rng& rng) {
  DropoutMask m;
  std::bernoulli_distribution keep(spec.keep_probability());
  for (std::size_t l = 1; l + 1 < spec.layer_sizes.size(); ++l) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(spec.layer_sizes[l]));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = keep(rng) ? 1.0 : 0.0;
    m.keep.push_back(std::move(v));
  }
  return m;
}

DropoutMask DropoutMask::all_kept(const NetworkSpec& spec) {
  DropoutMask m;
  for (std::size_t l = 1; l + 1 < spec.layer_sizes.size(); ++l) {
    m.keep.push_back(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(spec.layer_sizes[l])));
  }
  return m;
}

NetworkParams init_params(const NetworkSpec& spec, std::uint64_t rng_seed) {
  spec.validate();
  Rng rng(rng_seed);
  NetworkParams p;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(spec.layer_sizes[l]);
    const auto fan_out = static_cast<Eigen::Index>(spec.layer_sizes[l + 1]);
    const double s = spec.weight_init_scale * std::sqrt(1.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-s, s);
    Layer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
    for (Eigen::Index r = 0; r < fan_out; ++r) {
      for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = u(rng);
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

NetworkParams zeros_like(const NetworkParams& params) {
  NetworkParams z;
  for (const auto& l : params.layers) {
    z.layers.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  }
  return z;
}

ForwardCache forward(const NetworkParams& params, const NetworkSpec& spec,
                     std::span<const double> x, const DropoutMask* mask) {
  check_input(params, spec, x.size());
  if (mask) check_mask(spec, *mask);
  const double inv_keep = 1.0 / spec.keep_probability();

  ForwardCache cache;
  cache.activations.emplace_back(
      Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
  const std::size_t n_layers = params.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = params.layers[l];
    Eigen::VectorXd z = layer.weights * cache.activations.back() + layer.bias;
    if (l + 1 == n_layers) {
      cache.output = z[0];
      break;
    }
    Eigen::VectorXd h = z;
    activate_inplace(h, spec.activation);
    if (mask) h = h.cwiseProduct(mask->keep[l]) * inv_keep;
    cache.preactivations.push_back(std::move(z));
    cache.activations.push_back(std::move(h));
  }
  if (mask) cache.mask = *mask;
  return cache;
}

double predict(const NetworkParams& params, const NetworkSpec& spec, std::span<const double> x) {
  return forward(params, spec, x).output;
}

Eigen::VectorXd predict_batch(const NetworkParams& params, const NetworkSpec& spec,
                              const FeatureMatrix& inputs, const DropoutMask* mask) {
  check_input(params, spec, static_cast<std::size_t>(inputs.rows()));
  if (mask) check_mask(spec, *mask);
  const double inv_keep = 1.0 / spec.keep_probability();
  Eigen::MatrixXd a = inputs;
  const std::size_t n_layers = params.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = params.layers[l];
    Eigen::MatrixXd z = layer.weights * a;
    z.colwise() += layer.bias;
    if (l + 1 < n_layers) {
      activate_inplace(z, spec.activation);
      if (mask) z = (mask->keep[l] * inv_keep).asDiagonal() * z;
    }
    a = std::move(z);
  }
  return a.row(0).transpose();
}

Gradients backward(const NetworkParams& params, const NetworkSpec& spec,
                   const ForwardCache& cache, double target) {
  if (cache.activations.size() != params.layers.size()) {
    throw DataError("forward cache does not match the network");
  }
  const double inv_keep = 1.0 / spec.keep_probability();
  Gradients g = zeros_like(params);
  Eigen::VectorXd delta(1);
  delta[0] = 2.0 * (cache.output - target);
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    g.layers[l].weights.noalias() = delta * cache.activations[l].transpose();
    g.layers[l].bias = delta;
    if (l == 0) break;
    Eigen::VectorXd up = params.layers[l].weights.transpose() * delta;
    if (cache.mask) up = up.cwiseProduct(cache.mask->keep[l - 1]) * inv_keep;
    delta = up.cwiseProduct(activation_derivative(cache.preactivations[l - 1], spec.activation));
  }
  return g;
}

Gradients batch_gradient(const NetworkParams& params, const NetworkSpec& spec,
                         const FeatureMatrix& inputs, std::span<const double> targets,
                         std::span<const DropoutMask> masks) {
  check_input(params, spec, static_cast<std::size_t>(inputs.rows()));
  const Eigen::Index batch = inputs.cols();
  const std::size_t n_layers = params.layers.size();
  const bool masked = !masks.empty();
  if (masked && masks.size() != static_cast<std::size_t>(batch)) {
    throw DataError("batch_gradient: one mask per example required");
  }
  const double inv_keep = 1.0 / spec.keep_probability();

  // Per-layer mask matrices (hidden x batch), pre-scaled by 1/keep.
  std::vector<Eigen::MatrixXd> scale(n_layers - 1);
  if (masked) {
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
      scale[l].resize(static_cast<Eigen::Index>(spec.layer_sizes[l + 1]), batch);
      for (Eigen::Index b = 0; b < batch; ++b) {
        scale[l].col(b) = masks[static_cast<std::size_t>(b)].keep[l] * inv_keep;
      }
    }
  }

  std::vector<Eigen::MatrixXd> acts{inputs};
  std::vector<Eigen::MatrixXd> pre;
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z = params.layers[l].weights * acts.back();
    z.colwise() += params.layers[l].bias;
    if (l + 1 == n_layers) {
      acts.push_back(std::move(z));
      break;
    }
    Eigen::MatrixXd h = z;
    activate_inplace(h, spec.activation);
    if (masked) h = h.cwiseProduct(scale[l]);
    pre.push_back(std::move(z));
    acts.push_back(std::move(h));
  }

  Eigen::MatrixXd delta(1, batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    delta(0, b) = 2.0 * (acts.back()(0, b) - targets[static_cast<std::size_t>(b)]);
  }
  const double inv_batch = 1.0 / static_cast<double>(batch);
  Gradients g = zeros_like(params);
  for (std::size_t l = n_layers; l-- > 0;) {
    g.layers[l].weights.noalias() = delta * acts[l].transpose() * inv_batch;
    g.layers[l].bias = delta.rowwise().sum() * inv_batch;
    if (l == 0) break;
    Eigen::MatrixXd up = params.layers[l].weights.transpose() * delta;
    if (masked) up = up.cwiseProduct(scale[l - 1]);
    delta = up.cwiseProduct(activation_derivative(pre[l - 1], spec.activation));
  }
  return g;
}

AdamState AdamState::zeros_like(const NetworkParams& params) {
  return {netal::zeros_like(params), netal::zeros_like(params), 0};
}

void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state,
               const AdamHyper& hyper) {
  if (state.first_moment.layers.size() != params.layers.size()) {
    state = AdamState::zeros_like(params);
  }
  if (grads.layers.size() != params.layers.size()) throw DataError("adam_step: shape mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
      if (p.size() != g.size()) throw DataError("adam_step: shape mismatch");
      m = hyper.beta1 * m + (1.0 - hyper.beta1) * g;
      v = hyper.beta2 * v + (1.0 - hyper.beta2) * g.cwiseAbs2();
      p.array() -= hyper.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + hyper.eps);
    };
    update(params.layers[l].weights, grads.layers[l].weights,
           state.first_moment.layers[l].weights, state.second_moment.layers[l].weights);
    update(params.layers[l].bias, grads.layers[l].bias, state.first_moment.layers[l].bias,
           state.second_moment.layers[l].bias);
  }
}

double mean_squared_error(const NetworkParams& params, const NetworkSpec& spec,
                          const FeatureMatrix& inputs, std::span<const double> targets) {
  if (targets.empty()) return 0.0;
  const Eigen::VectorXd pred = predict_batch(params, spec, inputs);
  double sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double r = pred[static_cast<Eigen::Index>(i)] - targets[i];
    sum += r * r;
  }
  return sum / static_cast<double>(targets.size());
}

TrainResult train(NetworkParams params, const NetworkSpec& spec, const FeatureMatrix& inputs,
                  std::span<const double> targets, const TrainOptions& options,
                  AdamState* state) {
  const auto n = static_cast<std::size_t>(inputs.cols());
  if (n == 0 || targets.empty()) throw DataError("train: labeled set is empty");
  if (targets.size() != n) throw DataError("train: inputs and targets differ in length");
  if (options.batch_size == 0) throw ConfigError("train: batch size must be positive");

  AdamState local;
  AdamState& adam = state ? *state : local;
  Rng rng(options.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool use_dropout = spec.dropout_rate > 0.0;

  FeatureMatrix batch_x;
  std::vector<double> batch_y;
  std::vector<DropoutMask> masks;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      const std::size_t stop = std::min(n, start + options.batch_size);
      const auto b = static_cast<Eigen::Index>(stop - start);
      batch_x.resize(inputs.rows(), b);
      batch_y.resize(stop - start);
      masks.clear();
      for (std::size_t i = start; i < stop; ++i) {
        batch_x.col(static_cast<Eigen::Index>(i - start)) =
            inputs.col(static_cast<Eigen::Index>(order[i]));
        batch_y[i - start] = targets[order[i]];
        if (use_dropout) masks.push_back(DropoutMask::sample(spec, rng));
      }
      const Gradients g = batch_gradient(params, spec, batch_x, batch_y, masks);
      adam_step(params, g, adam, options.adam);
    }
    if (!params.all_finite()) {
      throw Error("training diverged: non-finite parameters after epoch " + std::to_string(epoch));
    }
  }
  const double mse = mean_squared_error(params, spec, inputs, targets);
  return {std::move(params), mse};
}

void save_params(const NetworkParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
  out << "netal-params 1\n" << params.layers.size() << '\n' << std::setprecision(17);
  for (const auto& l : params.layers) {
    out << l.weights.rows() << ' ' << l.weights.cols() << '\n';
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        out << (c ? " " : "") << l.weights(r, c);
      }
      out << '\n';
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out << (r ? " " : "") << l.bias[r];
    out << '\n';
  }
}

NetworkParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint '" + path.string() + "'");
  std::string magic;
  int version = 0;
  std::size_t n_layers = 0;
  in >> magic >> version >> n_layers;
  if (!in || magic != "netal-params" || version != 1) {
    throw DataError("'" + path.string() + "' is not a netal checkpoint");
  }
  NetworkParams p;
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::Index rows = 0, cols = 0;
    in >> rows >> cols;
    if (!in || rows <= 0 || cols <= 0) throw DataError("checkpoint: bad layer shape");
    Layer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) in >> layer.weights(r, c);
    }
    for (Eigen::Index r = 0; r < rows; ++r) in >> layer.bias[r];
    if (!in) throw DataError("checkpoint: truncated values");
    p.layers.push_back(std::move(layer));
  }
  return p;
}

}  // namespace netal
