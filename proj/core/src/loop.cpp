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

#include "netal/loop.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "netal/gmm.hpp"

namespace netal {

// ---------------------------------------------------------------- oracles

double Oracle::annotate(SampleId id, Budget& budget) {
  if (ledger_.annotated.contains(id)) {
    throw OracleError("id " + std::to_string(id) + " has already been annotated");
  }
  const auto label = hidden_label(id);
  if (!label) throw OracleError("oracle holds no hidden label for id " + std::to_string(id));
  budget.charge(budget.annotation_cost());
  ledger_.annotated.insert(id);
  ++ledger_.annotations;
  ledger_.charged += budget.annotation_cost();
  return *label;
}

std::vector<Sample> Oracle::collect(const Region& region, std::size_t count,
                                    const Normalizer& normalizer, SampleId first_id,
                                    Budget& budget) {
  count = std::min(count, budget.affordable(budget.collection_cost()));
  if (count == 0) return {};
  auto fresh = gather(region, count, normalizer, first_id);
  if (fresh.size() > count) throw OracleError("collector returned more samples than requested");
  const double cost = static_cast<double>(fresh.size()) * budget.collection_cost();
  budget.charge(cost);
  ledger_.collected += fresh.size();
  ledger_.charged += cost;
  for (auto& s : fresh) s.label.reset();
  return fresh;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

// Indices of the `count` entries closest to `centroid`, ties by index.
std::vector<std::size_t> nearest_indices(const std::vector<std::vector<double>>& points,
                                         std::span<const double> centroid, std::size_t count) {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d.emplace_back(squared_distance(points[i], centroid), i);
  count = std::min(count, d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(count), d.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(d[i].second);
  return out;
}

}  // namespace

PoolOracle::PoolOracle(std::map<SampleId, double> hidden_labels, std::vector<Sample> reserve)
    : labels_(std::move(hidden_labels)), reserve_(std::move(reserve)) {
  for (const auto& s : reserve_) {
    if (!s.label) throw DataError("reserve samples must carry their labels");
  }
}

std::optional<double> PoolOracle::hidden_label(SampleId id) const {
  if (auto it = labels_.find(id); it != labels_.end()) return it->second;
  return std::nullopt;
}

std::vector<Sample> PoolOracle::gather(const Region& region, std::size_t count,
                                       const Normalizer& normalizer, SampleId first_id) {
  std::vector<std::vector<double>> z;
  z.reserve(reserve_.size());
  for (const auto& s : reserve_) z.push_back(normalizer.normalize(s.features));
  auto picked = nearest_indices(z, region.centroid, count);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < picked.size(); ++i) {
    Sample s = reserve_[picked[i]];
    s.id = first_id + i;
    s.origin = Origin::kCollected;
    labels_[s.id] = *s.label;
    out.push_back(std::move(s));
  }
  std::sort(picked.begin(), picked.end(), std::greater<>());
  for (std::size_t i : picked) reserve_.erase(reserve_.begin() + static_cast<std::ptrdiff_t>(i));
  return out;
}

TwinOracle::TwinOracle(TwinWorld world, std::map<SampleId, double> hidden_labels,
                       std::uint64_t rng_seed)
    : world_(std::move(world)), labels_(std::move(hidden_labels)), seed_(rng_seed) {}

std::optional<double> TwinOracle::hidden_label(SampleId id) const {
  if (auto it = labels_.find(id); it != labels_.end()) return it->second;
  return std::nullopt;
}

std::vector<Sample> TwinOracle::gather(const Region& region, std::size_t count,
                                       const Normalizer& normalizer, SampleId first_id) {
  // Draw fresh measurements from the world and keep those nearest the region.
  constexpr std::size_t kOversample = 50;
  auto drawn = generate_synthetic_dataset(world_, count * kOversample, derive_seed(seed_, calls_++, 1));
  std::vector<std::vector<double>> z;
  z.reserve(drawn.size());
  for (const auto& s : drawn) z.push_back(normalizer.normalize(s.features));
  const auto picked = nearest_indices(z, region.centroid, count);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < picked.size(); ++i) {
    Sample s = std::move(drawn[picked[i]]);
    s.id = first_id + i;
    s.origin = Origin::kCollected;
    labels_[s.id] = *s.label;
    out.push_back(std::move(s));
  }
  return out;
}

InducedScenario TwinOracle::induce(std::span<const double> proposal, const Normalizer& normalizer,
                                   SampleId next_id, Budget& budget) {
  const double cost = budget.annotation_cost() + budget.collection_cost();
  if (!budget.can_afford(cost)) throw BudgetExhausted("budget cannot cover another scenario");
  const std::uint64_t call = calls_++;
  const auto raw = normalizer.denormalize(proposal);
  Sample s;
  s.id = next_id;
  s.origin = Origin::kSynthesized;
  s.features = realize_scenario(world_, raw, derive_seed(seed_, call, 2));
  s.label = twin_label(world_, s.features, derive_seed(seed_, call, 3));
  budget.charge(cost);
  ++ledger_.annotations;
  ++ledger_.collected;
  ledger_.charged += cost;
  ledger_.annotated.insert(next_id);
  return {std::move(s), false};
}

InducedScenario SnapToPoolOracle::induce(std::span<const double> proposal, const Normalizer&,
                                         SampleId, Budget& budget) {
  std::optional<SampleId> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (SampleId id : pool_.unlabeled()) {
    const double d = squared_distance(pool_.normalized(id), proposal);
    if (d < best_d) {
      best_d = d;
      best = id;
    }
  }
  if (!best) throw OracleError("no unlabeled pool sample left to snap to");
  Sample s = pool_.sample(*best);
  s.label = labels_.annotate(*best, budget);
  return {std::move(s), true};
}

// ---------------------------------------------------------------- curves

std::string LearningCurve::to_csv() const {
  std::string out = std::string(kHeader) + "\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.6g,%.6g,%.6g,%.6g\n", r.iteration, r.labeled_count,
                  r.budget_spent, r.test_rmse, r.mean_epistemic_std, r.aleatoric_var);
    out += buf;
  }
  return out;
}

void LearningCurve::write_csv(const std::filesystem::path& path) const {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << to_csv();
  }
  std::filesystem::rename(tmp, path);
}

void LearningCurve::check_invariants() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].iteration != i) throw Error("learning curve iterations must run 0, 1, 2, ...");
    if (i == 0) continue;
    if (rows[i].labeled_count < rows[i - 1].labeled_count) {
      throw Error("learning curve labeled_count decreased");
    }
    if (rows[i].budget_spent < rows[i - 1].budget_spent) {
      throw Error("learning curve budget_spent decreased");
    }
  }
}

// ---------------------------------------------------------------- learner

Eigen::VectorXd Learner::predict_mbps(const FeatureMatrix& inputs) const {
  Eigen::VectorXd y = predict_batch(params, spec, inputs);
  return (y * target_scale).array() + target_offset;
}

double rmse(std::span<const double> predictions, std::span<const double> labels) {
  if (labels.empty()) throw DataError("rmse: empty test set");
  if (predictions.size() != labels.size()) throw DataError("rmse: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s += (predictions[i] - labels[i]) * (predictions[i] - labels[i]);
  }
  return std::sqrt(s / static_cast<double>(labels.size()));
}

double evaluate_rmse(const Learner& learner, const FeatureMatrix& inputs,
                     std::span<const double> labels) {
  if (labels.empty()) throw DataError("evaluate_rmse: empty test set");
  const Eigen::VectorXd pred = learner.predict_mbps(inputs);
  return rmse({pred.data(), static_cast<std::size_t>(pred.size())}, labels);
}

// ---------------------------------------------------------------- engine

namespace {

enum Purpose : std::uint64_t {
  kInit = 1,
  kTrain = 2,
  kSelect = 3,
  kEvalMc = 4,
  kValidation = 5,
  kCommittee = 6,
  kStreamMc = 7,
  kGmm = 8,
  kProposal = 9,
  kProposalMc = 10,
};

FeatureMatrix normalized_matrix(const DataPool& pool, std::span<const SampleId> ids) {
  FeatureMatrix x(static_cast<Eigen::Index>(pool.feature_count()),
                  static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto z = pool.normalized(ids[i]);
    x.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
  }
  return x;
}

// State shared by the three loops: the learner, its validation fold, the
// fixed evaluation sets and the bookkeeping checks.
class Engine {
 public:
  Engine(const LoopConfig& config, DataPool& pool, std::uint64_t master_seed,
         const FeatureMatrix* probe)
      : config_(config), pool_(pool), seed_(master_seed) {
    config_.network.validate();
    if (config_.network.input_size() != pool_.feature_count()) {
      throw ConfigError("network input size " + std::to_string(config_.network.input_size()) +
                        " does not match feature count " + std::to_string(pool_.feature_count()));
    }
    if (pool_.labeled().empty()) throw DataError("loop needs a non-empty labeled seed");
    if (pool_.test().empty()) throw DataError("loop needs a non-empty test set");
    if (!pool_.normalizer()) pool_.set_normalizer(fit_normalizer(pool_));

    seed_ids_.assign(pool_.labeled().begin(), pool_.labeled().end());
    const auto n_val = static_cast<std::size_t>(
        std::floor(static_cast<double>(seed_ids_.size()) * config_.validation_fraction));
    if (n_val > 0 && n_val < seed_ids_.size()) {
      auto v = random_select(seed_ids_, n_val, derive_seed(seed_, 0, kValidation));
      validation_.insert(v.begin(), v.end());
    }

    const std::vector<SampleId> test(pool_.test().begin(), pool_.test().end());
    test_x_ = normalized_matrix(pool_, test);
    for (SampleId id : test) test_y_.push_back(*pool_.sample(id).label);
    if (probe) {
      probe_x_ = FeatureMatrix(probe->rows(), probe->cols());
      const auto& norm = *pool_.normalizer();
      for (Eigen::Index c = 0; c < probe->cols(); ++c) {
        const Eigen::VectorXd col = probe->col(c);
        const auto z = norm.normalize({col.data(), static_cast<std::size_t>(col.size())});
        probe_x_->col(c) = Eigen::Map<const Eigen::VectorXd>(z.data(), col.size());
      }
    }

    learner_.spec = config_.network;
    const auto train_ids = training_ids();
    double mean = 0.0;
    for (SampleId id : train_ids) mean += *pool_.sample(id).label;
    mean /= static_cast<double>(train_ids.size());
    double var = 0.0;
    for (SampleId id : train_ids) var += std::pow(*pool_.sample(id).label - mean, 2);
    var /= static_cast<double>(train_ids.size());
    learner_.target_offset = mean;
    learner_.target_scale = var > 1e-16 ? std::sqrt(var) : 1.0;
  }

  const std::vector<SampleId>& seed_ids() const { return seed_ids_; }
  const Learner& learner() const { return learner_; }
  const LoopConfig& config() const { return config_; }

  std::vector<SampleId> training_ids() const {
    std::vector<SampleId> ids;
    for (SampleId id : pool_.labeled()) {
      if (!validation_.contains(id)) ids.push_back(id);
    }
    return ids;
  }

  void fit(std::size_t iteration) {
    const auto ids = training_ids();
    for (SampleId id : ids) {
      if (pool_.is_test(id)) throw Error("hygiene violation: test id in training set");
    }
    const FeatureMatrix x = normalized_matrix(pool_, ids);
    std::vector<double> y;
    y.reserve(ids.size());
    for (SampleId id : ids) y.push_back(scaled(*pool_.sample(id).label));

    const bool cold = iteration == 0 || !config_.warm_start;
    TrainOptions opts;
    opts.epochs = cold ? config_.initial_epochs : config_.finetune_epochs;
    opts.batch_size = config_.train_batch_size;
    opts.adam = config_.adam;
    opts.seed = derive_seed(seed_, iteration, kTrain);
    if (cold) {
      learner_.params = init_params(config_.network, derive_seed(seed_, iteration, kInit));
      adam_ = AdamState{};
    } else if (!config_.persist_optimizer) {
      adam_ = AdamState{};
    }
    if (adam_.first_moment.layers.empty()) adam_ = AdamState::zeros_like(learner_.params);
    learner_.params = train(std::move(learner_.params), config_.network, x, y, opts, &adam_).params;

    if (config_.strategy == Strategy::kQbc) {
      const std::uint64_t base = derive_seed(seed_, iteration, kCommittee);
      if (cold || !committee_) {
        committee_ = committee_train(config_.network, x, y, config_.committee_size, base, opts);
      } else {
        for (std::size_t k = 0; k < committee_->members.size(); ++k) {
          TrainOptions member = opts;
          member.seed = base + k;
          committee_->members[k] =
              train(std::move(committee_->members[k]), config_.network, x, y, member).params;
        }
      }
    }
  }

  ModelState model_state(std::size_t iteration) const {
    ModelState m;
    m.spec = &learner_.spec;
    m.params = &learner_.params;
    m.committee = committee_ ? &*committee_ : nullptr;
    m.mc_passes = config_.mc_passes;
    m.seed = derive_seed(seed_, iteration, kSelect);
    m.hybrid_beta = config_.hybrid_beta;
    return m;
  }

  // Epistemic std in Mbps for each column of `x`.
  std::vector<double> epistemic_std_mbps(const FeatureMatrix& x, std::uint64_t seed) const {
    const auto dist = mc_predict_batch(learner_.params, learner_.spec, x, config_.mc_passes, seed);
    std::vector<double> out(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) out[i] = dist[i].epistemic_std() * learner_.target_scale;
    return out;
  }

  CurveRow record(std::size_t iteration, const Budget& budget) const {
    CurveRow row;
    row.iteration = iteration;
    row.labeled_count = pool_.labeled().size();
    row.budget_spent = budget.spent();
    row.test_rmse = evaluate_rmse(learner_, test_x_, test_y_);
    const FeatureMatrix& probe = probe_x_ ? *probe_x_ : test_x_;
    const auto stds = epistemic_std_mbps(probe, derive_seed(seed_, iteration, kEvalMc));
    row.mean_epistemic_std =
        stds.empty() ? 0.0
                     : std::accumulate(stds.begin(), stds.end(), 0.0) / static_cast<double>(stds.size());

    std::vector<SampleId> fold(validation_.begin(), validation_.end());
    if (fold.empty()) fold = training_ids();
    const FeatureMatrix vx = normalized_matrix(pool_, fold);
    std::vector<double> vy;
    for (SampleId id : fold) vy.push_back(scaled(*pool_.sample(id).label));
    row.aleatoric_var = estimate_aleatoric(learner_.params, learner_.spec, vx, vy) *
                        learner_.target_scale * learner_.target_scale;
    return row;
  }

  void check(const OracleLedger& ledger, const Budget& budget, std::size_t expected_labeled) const {
    pool_.check_invariants();
    for (SampleId id : ledger.annotated) {
      if (pool_.is_test(id)) throw Error("hygiene violation: test id was annotated");
    }
    if (pool_.labeled().size() != expected_labeled) {
      throw Error("conservation violation: labeled count " + std::to_string(pool_.labeled().size()) +
                  " != seed + granted annotations " + std::to_string(expected_labeled));
    }
    if (budget.spent() > budget.total()) throw Error("budget overdraft");
    const double expected = static_cast<double>(ledger.annotations) * budget.annotation_cost() +
                            static_cast<double>(ledger.collected) * budget.collection_cost();
    const double tol = 1e-9 * std::max(1.0, expected);
    if (std::abs(budget.spent() - ledger.charged) > tol || std::abs(ledger.charged - expected) > tol) {
      throw Error("budget accounting violation: spent " + std::to_string(budget.spent()) +
                  ", expected " + std::to_string(expected));
    }
  }

  double scaled(double mbps) const { return (mbps - learner_.target_offset) / learner_.target_scale; }

 private:
  LoopConfig config_;
  DataPool& pool_;
  std::uint64_t seed_;
  std::vector<SampleId> seed_ids_;
  std::set<SampleId> validation_;
  FeatureMatrix test_x_;
  std::vector<double> test_y_;
  std::optional<FeatureMatrix> probe_x_;
  Learner learner_;
  AdamState adam_;
  std::optional<Committee> committee_;
};

Budget make_budget(const LoopConfig& c) {
  return Budget(c.budget_total, c.annotation_cost, c.collection_cost);
}

LoopResult finish(LoopResult result, const Budget& budget, const OracleLedger& ledger) {
  result.ledger = ledger;
  result.budget_total = budget.total();
  result.budget_spent = budget.spent();
  result.curve.check_invariants();
  return result;
}

double rolling_quantile(const std::deque<double>& window, double q) {
  std::vector<double> v(window.begin(), window.end());
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

LoopResult run_pool_loop(const LoopConfig& config, DataPool& pool, Oracle& oracle,
                         std::uint64_t master_seed) {
  if (pool.unlabeled().empty()) throw DataError("pool loop needs a non-empty unlabeled set");
  Engine engine(config, pool, master_seed, nullptr);
  Budget budget = make_budget(config);
  if (!(budget.total() > 0.0)) throw ConfigError("pool loop needs a positive budget");

  LoopResult result;
  result.seed_ids = engine.seed_ids();
  result.queried.emplace_back();
  const std::size_t seed_count = pool.labeled().size();
  const std::size_t base_annotations = oracle.ledger().annotations;

  engine.fit(0);
  result.curve.rows.push_back(engine.record(0, budget));

  for (std::size_t it = 1; it <= config.iterations; ++it) {
    if (pool.unlabeled().empty()) break;
    AcquisitionDecision decision;
    try {
      decision = decide_acquisition(config.strategy, engine.model_state(it), pool,
                                    config.batch_size, budget, config.collect);
    } catch (const BudgetExhausted&) {
      break;
    }
    if (decision.annotate_ids.empty()) break;
    for (SampleId id : decision.annotate_ids) {
      pool.reveal(id, oracle.annotate(id, budget), static_cast<int>(it));
    }
    if (decision.collect_count > 0 && decision.collect_region) {
      auto fresh = oracle.collect(*decision.collect_region, decision.collect_count,
                                  *pool.normalizer(), pool.next_id(), budget);
      for (auto& s : fresh) {
        s.iteration_acquired = static_cast<int>(it);
        pool.add_unlabeled(std::move(s));
      }
    }
    result.queried.push_back(decision.annotate_ids);
    engine.check(oracle.ledger(), budget,
                 seed_count + oracle.ledger().annotations - base_annotations);
    engine.fit(it);
    result.curve.rows.push_back(engine.record(it, budget));
  }
  return finish(std::move(result), budget, oracle.ledger());
}

LoopResult run_stream_loop(const LoopConfig& config, DataPool& pool,
                           std::span<const SampleId> stream, Oracle& oracle,
                           const StreamPolicy& policy, std::uint64_t master_seed) {
  if (!(policy.quantile > 0.0 && policy.quantile < 1.0)) {
    throw ConfigError("stream quantile must lie in (0, 1)");
  }
  if (policy.window == 0 || policy.max_queries == 0 || policy.refit_every == 0) {
    throw ConfigError("stream window, max_queries and refit_every must be positive");
  }
  for (SampleId id : stream) {
    if (!pool.is_unlabeled(id)) {
      throw DataError("stream arrival " + std::to_string(id) + " is not an unlabeled pool sample");
    }
  }
  Engine engine(config, pool, master_seed, nullptr);
  Budget budget = make_budget(config);

  LoopResult result;
  result.seed_ids = engine.seed_ids();
  result.queried.emplace_back();
  const std::size_t seed_count = pool.labeled().size();
  const std::size_t base_annotations = oracle.ledger().annotations;

  engine.fit(0);
  result.curve.rows.push_back(engine.record(0, budget));

  std::deque<double> history;
  std::vector<SampleId> pending;
  std::size_t queries = 0;
  auto refit = [&]() {
    const std::size_t it = result.curve.rows.size();
    result.queried.push_back(pending);
    pending.clear();
    engine.check(oracle.ledger(), budget,
                 seed_count + oracle.ledger().annotations - base_annotations);
    engine.fit(it);
    result.curve.rows.push_back(engine.record(it, budget));
  };

  for (std::size_t i = 0; i < stream.size(); ++i) {
    const SampleId id = stream[i];
    const auto z = pool.normalized(id);
    const FeatureMatrix x =
        Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
    const double score = engine.epistemic_std_mbps(x, derive_seed(master_seed, i, kStreamMc))[0];
    const double threshold = history.empty() ? std::numeric_limits<double>::infinity()
                                             : rolling_quantile(history, policy.quantile);
    const bool query = score > threshold && queries < policy.max_queries &&
                       budget.affordable(budget.annotation_cost()) > 0;
    if (query) {
      pool.reveal(id, oracle.annotate(id, budget),
                  static_cast<int>(result.curve.rows.size()));
      pending.push_back(id);
      ++queries;
    }
    result.stream_log.push_back({i, id, score, threshold, query});
    history.push_back(score);
    if (history.size() > policy.window) history.pop_front();
    if (pending.size() == policy.refit_every) refit();
  }
  if (!pending.empty()) refit();
  return finish(std::move(result), budget, oracle.ledger());
}

LoopResult run_synthesis_loop(const LoopConfig& config, DataPool& pool, ScenarioOracle& oracle,
                              const SynthesisOptions& options, const FeatureMatrix* probe,
                              std::uint64_t master_seed) {
  if (options.candidates == 0) throw ConfigError("synthesis needs at least one candidate");
  Engine engine(config, pool, master_seed, probe);
  Budget budget = make_budget(config);

  LoopResult result;
  result.seed_ids = engine.seed_ids();
  result.queried.emplace_back();
  const std::size_t seed_count = pool.labeled().size();
  const std::size_t base_annotations = oracle.ledger().annotations;

  engine.fit(0);
  result.curve.rows.push_back(engine.record(0, budget));

  const double scenario_cost = budget.annotation_cost() + budget.collection_cost();
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    if (!budget.can_afford(scenario_cost)) break;

    std::vector<SampleId> known(pool.labeled().begin(), pool.labeled().end());
    known.insert(known.end(), pool.unlabeled().begin(), pool.unlabeled().end());
    std::sort(known.begin(), known.end());
    const FeatureMatrix current = normalized_matrix(pool, known);
    const std::size_t k = std::min(options.gmm_components, known.size());
    const GmmFit density =
        fit_gmm(current, k, options.em_iters, derive_seed(master_seed, it, kGmm));
    const FeatureMatrix proposals =
        sample_gmm(density.model, options.candidates, derive_seed(master_seed, it, kProposal));
    const auto stds = engine.epistemic_std_mbps(proposals, derive_seed(master_seed, it, kProposalMc));

    ScoreMap scores;
    for (std::size_t i = 0; i < stds.size(); ++i) scores.emplace_hint(scores.end(), i, stds[i]);
    const auto order = rank_uncertainty(scores);

    std::vector<SampleId> labeled_now;
    for (std::size_t j = 0; j < order.size() && labeled_now.size() < config.batch_size; ++j) {
      if (!budget.can_afford(scenario_cost)) break;
      const Eigen::VectorXd col = proposals.col(static_cast<Eigen::Index>(order[j]));
      InducedScenario induced;
      try {
        induced = oracle.induce({col.data(), static_cast<std::size_t>(col.size())},
                                *pool.normalizer(), pool.next_id(), budget);
      } catch (const BudgetExhausted&) {
        break;
      } catch (const OracleError&) {
        break;
      }
      SampleId id = induced.sample.id;
      if (induced.from_pool) {
        pool.reveal(id, *induced.sample.label, static_cast<int>(it));
      } else {
        induced.sample.iteration_acquired = static_cast<int>(it);
        id = pool.add_labeled(std::move(induced.sample));
      }
      labeled_now.push_back(id);
    }
    if (labeled_now.empty()) break;
    result.queried.push_back(labeled_now);
    engine.check(oracle.ledger(), budget,
                 seed_count + oracle.ledger().annotations - base_annotations);
    engine.fit(it);
    result.curve.rows.push_back(engine.record(it, budget));
  }
  return finish(std::move(result), budget, oracle.ledger());
}

}  // namespace netal
