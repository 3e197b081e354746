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
#include <span>
#include <vector>

#include "netal/neural.hpp"

namespace netal {

// Diagonal-covariance Gaussian mixture used as the scenario density model.
struct GaussianMixture {
  static constexpr double kVarianceFloor = 1e-6;

  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::VectorXd> variances;

  std::size_t components() const { return weights.size(); }
  std::size_t dimension() const { return means.empty() ? 0 : static_cast<std::size_t>(means[0].size()); }
  double log_density(const Eigen::VectorXd& x) const;
};

struct GmmFit {
  GaussianMixture model;
  // Total log-likelihood of the data after initialization, then after each EM
  // iteration that ran.
  std::vector<double> log_likelihood;
  std::size_t iterations = 0;
};

// k-means++ seeding, then EM for at most em_iters iterations, stopping early
// once the per-point log-likelihood gain drops below 1e-6.
GmmFit fit_gmm(const FeatureMatrix& points, std::size_t components, std::size_t em_iters,
               std::uint64_t rng_seed);

double gmm_log_likelihood(const GaussianMixture& gmm, const FeatureMatrix& points);

// One column per draw. `component_of`, when given, receives each draw's component.
FeatureMatrix sample_gmm(const GaussianMixture& gmm, std::size_t n, std::uint64_t rng_seed,
                         std::vector<std::size_t>* component_of = nullptr);

}  // namespace netal
