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

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "netal/neural.hpp"

namespace netal {

struct PredictiveDistribution {
  double mean = 0.0;
  double epistemic_var = 0.0;  // spread of the stochastic passes
  double aleatoric_var = 0.0;  // filled from estimate_aleatoric by the caller
  std::size_t n_passes = 0;

  double epistemic_std() const { return std::sqrt(epistemic_var); }
};

// T stochastic passes with independent dropout masks. Pass t draws its mask
// from a generator seeded with rng_seed + t, so results do not depend on how
// passes are scheduled. Variance is the unbiased sample variance (0 for T=1).
PredictiveDistribution mc_predict(const NetworkParams& params, const NetworkSpec& spec,
                                  std::span<const double> x, std::size_t passes,
                                  std::uint64_t rng_seed);

// Column-wise mc_predict. Within a pass every column shares the same mask, so
// a column's result depends only on its own features and the seed.
std::vector<PredictiveDistribution> mc_predict_batch(const NetworkParams& params,
                                                     const NetworkSpec& spec,
                                                     const FeatureMatrix& inputs,
                                                     std::size_t passes, std::uint64_t rng_seed);

// Mean squared residual of maskless predictions on a held-out labeled fold.
double estimate_aleatoric(const NetworkParams& params, const NetworkSpec& spec,
                          const FeatureMatrix& inputs, std::span<const double> targets);

struct Committee {
  NetworkSpec spec;
  std::vector<NetworkParams> members;
};

// Member k is initialized and shuffled with base_seed + k.
Committee committee_train(const NetworkSpec& spec, const FeatureMatrix& inputs,
                          std::span<const double> targets, std::size_t members,
                          std::uint64_t base_seed, const TrainOptions& options);

// Unbiased variance of the members' deterministic predictions.
double committee_disagreement(const Committee& committee, std::span<const double> x);
std::vector<double> committee_disagreement_batch(const Committee& committee,
                                                 const FeatureMatrix& inputs);

// Unbiased variance of a small set of values; 0 for fewer than two.
double sample_variance(std::span<const double> values);

}  // namespace netal
