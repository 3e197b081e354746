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

#include "netal/bayesian.hpp"

namespace netal {

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

std::vector<PredictiveDistribution> mc_predict_batch(const NetworkParams& params,
                                                     const NetworkSpec& spec,
                                                     const FeatureMatrix& inputs,
                                                     std::size_t passes, std::uint64_t rng_seed) {
  if (passes == 0) throw ConfigError("mc_predict: number of passes must be positive");
  const auto n = static_cast<std::size_t>(inputs.cols());
  std::vector<PredictiveDistribution> out(n);
  if (n == 0) return out;

  // Welford accumulators per column.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(inputs.cols());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(inputs.cols());
  for (std::size_t t = 0; t < passes; ++t) {
    Rng rng(rng_seed + t);
    const DropoutMask mask = DropoutMask::sample(spec, rng);
    const Eigen::VectorXd y = predict_batch(params, spec, inputs, &mask);
    const Eigen::VectorXd d = y - mean;
    mean += d / static_cast<double>(t + 1);
    m2 += d.cwiseProduct(y - mean);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out[i].mean = mean[k];
    out[i].epistemic_var = passes > 1 ? std::max(0.0, m2[k] / static_cast<double>(passes - 1)) : 0.0;
    out[i].n_passes = passes;
  }
  if (spec.dropout_rate == 0.0) {
    for (auto& d : out) d.epistemic_var = 0.0;
  }
  return out;
}

PredictiveDistribution mc_predict(const NetworkParams& params, const NetworkSpec& spec,
                                  std::span<const double> x, std::size_t passes,
                                  std::uint64_t rng_seed) {
  const FeatureMatrix col =
      Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  return mc_predict_batch(params, spec, col, passes, rng_seed).front();
}

double estimate_aleatoric(const NetworkParams& params, const NetworkSpec& spec,
                          const FeatureMatrix& inputs, std::span<const double> targets) {
  if (targets.empty() || inputs.cols() == 0) {
    throw DataError("estimate_aleatoric: validation set is empty");
  }
  return mean_squared_error(params, spec, inputs, targets);
}

Committee committee_train(const NetworkSpec& spec, const FeatureMatrix& inputs,
                          std::span<const double> targets, std::size_t members,
                          std::uint64_t base_seed, const TrainOptions& options) {
  if (members < 2) throw ConfigError("committee needs at least two members");
  Committee c{spec, {}};
  c.members.reserve(members);
  for (std::size_t k = 0; k < members; ++k) {
    TrainOptions opts = options;
    opts.seed = base_seed + k;
    c.members.push_back(train(init_params(spec, base_seed + k), spec, inputs, targets, opts).params);
  }
  return c;
}

std::vector<double> committee_disagreement_batch(const Committee& committee,
                                                 const FeatureMatrix& inputs) {
  const auto n = static_cast<std::size_t>(inputs.cols());
  std::vector<Eigen::VectorXd> preds;
  preds.reserve(committee.members.size());
  for (const auto& m : committee.members) preds.push_back(predict_batch(m, committee.spec, inputs));
  std::vector<double> out(n);
  std::vector<double> column(committee.members.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < preds.size(); ++k) column[k] = preds[k][static_cast<Eigen::Index>(i)];
    out[i] = sample_variance(column);
  }
  return out;
}

double committee_disagreement(const Committee& committee, std::span<const double> x) {
  const FeatureMatrix col =
      Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  return committee_disagreement_batch(committee, col).front();
}

}  // namespace netal
