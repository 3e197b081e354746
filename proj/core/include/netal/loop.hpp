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
#include <set>
#include <span>
#include <vector>

#include "netal/acquisition.hpp"
#include "netal/twin_world.hpp"

namespace netal {

struct OracleLedger {
  std::size_t annotations = 0;
  std::size_t collected = 0;
  double charged = 0.0;
  std::set<SampleId> annotated;
};

// Label provider and data collector. Every successful call charges the budget
// exactly once; annotating an id twice, or an id the oracle holds no hidden
// label for (seed-labeled and test ids included), is rejected.
class Oracle {
 public:
  virtual ~Oracle() = default;

  double annotate(SampleId id, Budget& budget);

  // Gathers up to `count` new unlabeled samples near `region` (normalized
  // space), truncated to what the budget affords. Returned samples carry ids
  // first_id, first_id+1, ... and no labels.
  std::vector<Sample> collect(const Region& region, std::size_t count,
                              const Normalizer& normalizer, SampleId first_id, Budget& budget);

  const OracleLedger& ledger() const { return ledger_; }

 protected:
  virtual std::optional<double> hidden_label(SampleId id) const = 0;
  // Must remember the labels of what it returns under the assigned ids.
  virtual std::vector<Sample> gather(const Region& region, std::size_t count,
                                     const Normalizer& normalizer, SampleId first_id) = 0;

  OracleLedger ledger_;
};

// Reveals labels hidden by split_pool. Collection draws the samples nearest
// to the region centroid from an optional reserve of extra records.
class PoolOracle : public Oracle {
 public:
  explicit PoolOracle(std::map<SampleId, double> hidden_labels, std::vector<Sample> reserve = {});

 protected:
  std::optional<double> hidden_label(SampleId id) const override;
  std::vector<Sample> gather(const Region& region, std::size_t count,
                             const Normalizer& normalizer, SampleId first_id) override;

 private:
  std::map<SampleId, double> labels_;
  std::vector<Sample> reserve_;
};

struct InducedScenario {
  Sample sample;  // labeled
  bool from_pool = false;
};

// Turns a proposed point (normalized space) into a labeled sample.
class ScenarioOracle {
 public:
  virtual ~ScenarioOracle() = default;
  virtual InducedScenario induce(std::span<const double> proposal, const Normalizer& normalizer,
                                 SampleId next_id, Budget& budget) = 0;
  virtual const OracleLedger& ledger() const = 0;
};

// Twin-backed oracle: hidden pool labels plus scenario induction in the
// analytic world. Induction charges collection + annotation cost.
class TwinOracle : public Oracle, public ScenarioOracle {
 public:
  TwinOracle(TwinWorld world, std::map<SampleId, double> hidden_labels, std::uint64_t rng_seed);

  InducedScenario induce(std::span<const double> proposal, const Normalizer& normalizer,
                         SampleId next_id, Budget& budget) override;
  const OracleLedger& ledger() const override { return ledger_; }

 protected:
  std::optional<double> hidden_label(SampleId id) const override;
  std::vector<Sample> gather(const Region& region, std::size_t count,
                             const Normalizer& normalizer, SampleId first_id) override;

 private:
  TwinWorld world_;
  std::map<SampleId, double> labels_;
  std::uint64_t seed_;
  std::uint64_t calls_ = 0;
};

// Without a twin, a proposal is snapped to the nearest unlabeled pool sample
// (normalized Euclidean, ties by id), which is then annotated.
class SnapToPoolOracle : public ScenarioOracle {
 public:
  SnapToPoolOracle(Oracle& labels, const DataPool& pool) : labels_(labels), pool_(pool) {}

  InducedScenario induce(std::span<const double> proposal, const Normalizer& normalizer,
                         SampleId next_id, Budget& budget) override;
  const OracleLedger& ledger() const override { return labels_.ledger(); }

 private:
  Oracle& labels_;
  const DataPool& pool_;
};

struct CurveRow {
  std::size_t iteration = 0;
  std::size_t labeled_count = 0;
  double budget_spent = 0.0;
  double test_rmse = 0.0;           // Mbps
  double mean_epistemic_std = 0.0;  // Mbps
  double aleatoric_var = 0.0;       // Mbps^2

  bool operator==(const CurveRow&) const = default;
};

struct LearningCurve {
  std::vector<CurveRow> rows;

  static constexpr const char* kHeader =
      "iteration,labeled_count,budget_spent,test_rmse,mean_epistemic_std,aleatoric_var";
  // Header plus one row per iteration, reals at 6 significant digits.
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
  // Iterations strictly increasing from 0; counts and spend non-decreasing.
  void check_invariants() const;
};

struct LoopConfig {
  Strategy strategy = Strategy::kUncertainty;
  std::size_t batch_size = 4;
  std::size_t iterations = 10;

  double budget_total = 1e9;
  double annotation_cost = 1.0;
  double collection_cost = 0.25;
  CollectPolicy collect;

  NetworkSpec network{{19, 64, 64, 1}, 0.2, Activation::kRelu, 1.0};
  AdamHyper adam;
  std::size_t train_batch_size = 64;
  std::size_t initial_epochs = 100;
  std::size_t finetune_epochs = 20;
  bool warm_start = true;
  bool persist_optimizer = false;

  std::size_t mc_passes = 50;
  std::size_t committee_size = 5;
  double hybrid_beta = 0.5;
  // Share of the seed labels held out (never trained on) for the aleatoric
  // estimate. 0 falls back to the in-sample residual.
  double validation_fraction = 0.1;
};

struct StreamPolicy {
  double quantile = 0.9;
  std::size_t window = 100;
  std::size_t max_queries = 100;
  std::size_t refit_every = 10;
};

struct StreamDecision {
  std::size_t arrival = 0;
  SampleId id = 0;
  double score = 0.0;
  double threshold = 0.0;
  bool queried = false;
};

struct SynthesisOptions {
  std::size_t gmm_components = 8;
  std::size_t em_iters = 50;
  std::size_t candidates = 256;
};

struct LoopResult {
  LearningCurve curve;
  std::vector<SampleId> seed_ids;
  // queried[k] lists the ids labeled during iteration k (queried[0] is empty).
  std::vector<std::vector<SampleId>> queried;
  std::vector<StreamDecision> stream_log;
  OracleLedger ledger;
  double budget_total = 0.0;
  double budget_spent = 0.0;
};

// Network plus the affine map from network output to Mbps.
struct Learner {
  NetworkSpec spec;
  NetworkParams params;
  double target_offset = 0.0;
  double target_scale = 1.0;

  Eigen::VectorXd predict_mbps(const FeatureMatrix& inputs) const;
};

double rmse(std::span<const double> predictions, std::span<const double> labels);
double evaluate_rmse(const Learner& learner, const FeatureMatrix& inputs,
                     std::span<const double> labels);

// Pool-based cycle: train on the seed, then repeatedly score the unlabeled
// set, acquire, annotate (and optionally collect), fine-tune and record.
// Stops at the iteration limit, on budget exhaustion or when the pool is empty.
LoopResult run_pool_loop(const LoopConfig& config, DataPool& pool, Oracle& oracle,
                         std::uint64_t master_seed);

// Stream-based cycle over `stream` (unlabeled pool ids in arrival order).
LoopResult run_stream_loop(const LoopConfig& config, DataPool& pool,
                           std::span<const SampleId> stream, Oracle& oracle,
                           const StreamPolicy& policy, std::uint64_t master_seed);

// Membership query synthesis: density model over current features proposes
// candidates; the most uncertain are induced through the scenario oracle.
// `probe` (raw features, one per column) replaces the test set for the
// mean_epistemic_std column when given.
LoopResult run_synthesis_loop(const LoopConfig& config, DataPool& pool, ScenarioOracle& oracle,
                              const SynthesisOptions& options, const FeatureMatrix* probe,
                              std::uint64_t master_seed);

}  // namespace netal
