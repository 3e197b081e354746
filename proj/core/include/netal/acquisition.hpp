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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "netal/bayesian.hpp"
#include "netal/dataset.hpp"

namespace netal {

enum class Strategy { kRandom, kUncertainty, kQbc, kCoreset, kHybrid };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view token);  // throws ConfigError

// Abstract cost units. spent never exceeds total: charge() refuses overdrafts.
class Budget {
 public:
  Budget(double total, double annotation_cost, double collection_cost);

  double total() const { return total_; }
  double spent() const { return spent_; }
  double remaining() const { return total_ - spent_; }
  double annotation_cost() const { return annotation_cost_; }
  double collection_cost() const { return collection_cost_; }

  bool can_afford(double cost) const { return spent_ + cost <= total_; }
  // Largest n with n * unit_cost affordable on top of `reserved`.
  std::size_t affordable(double unit_cost, double reserved = 0.0) const;
  void charge(double cost);

 private:
  double total_;
  double spent_ = 0.0;
  double annotation_cost_;
  double collection_cost_;
};

// Ball in normalized feature space.
struct Region {
  std::vector<double> centroid;
  double radius = 0.0;
};

struct AcquisitionDecision {
  std::vector<SampleId> annotate_ids;
  std::size_t collect_count = 0;
  std::optional<Region> collect_region;
  double cost = 0.0;
};

struct CollectPolicy {
  bool enabled = false;
  double collect_fraction = 0.0;
};

using ScoreMap = std::map<SampleId, double>;

// Descending score, ties by ascending id.
std::vector<SampleId> rank_uncertainty(const ScoreMap& scores);

// Greedy k-center: each step takes the candidate farthest (Euclidean) from
// labeled plus already-selected points, ties by ascending id.
std::vector<SampleId> select_core_set(const std::vector<std::vector<double>>& labeled_features,
                                      const std::map<SampleId, std::vector<double>>& candidates,
                                      std::size_t k);

// uncertainty^beta * diversity^(1-beta)
double hybrid_score(double uncertainty, double diversity, double beta);

std::vector<SampleId> random_select(std::span<const SampleId> candidates, std::size_t k,
                                    std::uint64_t rng_seed);

// What the scoring strategies need from the learner. Scores may be in network
// units; only their order matters.
struct ModelState {
  const NetworkSpec* spec = nullptr;
  const NetworkParams* params = nullptr;
  const Committee* committee = nullptr;  // required by kQbc
  std::size_t mc_passes = 50;
  std::uint64_t seed = 0;  // MC masks and random selection
  double hybrid_beta = 0.5;
};

// Per-candidate scores over the pool's unlabeled set for score-based
// strategies (uncertainty: MC epistemic std; qbc: committee std; hybrid).
ScoreMap score_candidates(Strategy strategy, const ModelState& model, const DataPool& pool);

// Distance from each unlabeled sample to its nearest labeled neighbour.
ScoreMap nearest_labeled_distance(const DataPool& pool);

// Truncates a ranking to the affordable batch and attaches the collection
// request. Throws BudgetExhausted when not one annotation is affordable.
AcquisitionDecision decide_from_ranking(std::span<const SampleId> ranking, const DataPool& pool,
                                        std::size_t batch_size, const Budget& budget,
                                        const CollectPolicy& collect);

AcquisitionDecision decide_from_scores(const ScoreMap& scores, const DataPool& pool,
                                       std::size_t batch_size, const Budget& budget,
                                       const CollectPolicy& collect);

AcquisitionDecision decide_acquisition(Strategy strategy, const ModelState& model,
                                       const DataPool& pool, std::size_t batch_size,
                                       const Budget& budget, const CollectPolicy& collect);

}  // namespace netal
