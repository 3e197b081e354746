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

#include "netal/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace netal {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kRandom: return "random";
    case Strategy::kUncertainty: return "uncertainty";
    case Strategy::kQbc: return "qbc";
    case Strategy::kCoreset: return "coreset";
    case Strategy::kHybrid: return "hybrid";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view token) {
  for (Strategy s : {Strategy::kRandom, Strategy::kUncertainty, Strategy::kQbc, Strategy::kCoreset,
                     Strategy::kHybrid}) {
    if (token == to_string(s)) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(token) +
                    "' (expected random|uncertainty|qbc|coreset|hybrid)");
}

Budget::Budget(double total, double annotation_cost, double collection_cost)
    : total_(total), annotation_cost_(annotation_cost), collection_cost_(collection_cost) {
  if (!(total >= 0.0)) throw ConfigError("budget total must be non-negative");
  if (!(annotation_cost > 0.0) || !(collection_cost > 0.0)) {
    throw ConfigError("annotation and collection costs must be positive");
  }
}

std::size_t Budget::affordable(double unit_cost, double reserved) const {
  const double room = total_ - spent_ - reserved;
  if (!(room >= 0.0) || !(unit_cost > 0.0)) return 0;
  const double raw = std::floor(room / unit_cost);
  if (raw >= 1e15) return static_cast<std::size_t>(1e15);
  auto n = static_cast<std::size_t>(raw);
  while (n > 0 && spent_ + reserved + static_cast<double>(n) * unit_cost > total_) --n;
  while (spent_ + reserved + static_cast<double>(n + 1) * unit_cost <= total_) ++n;
  return n;
}

void Budget::charge(double cost) {
  if (cost < 0.0) throw Error("budget charge must be non-negative");
  if (!can_afford(cost)) {
    throw BudgetExhausted("charge of " + std::to_string(cost) + " exceeds remaining budget " +
                          std::to_string(remaining()));
  }
  spent_ += cost;
}

std::vector<SampleId> rank_uncertainty(const ScoreMap& scores) {
  std::vector<std::pair<SampleId, double>> items(scores.begin(), scores.end());
  for (const auto& [id, s] : items) {
    if (!std::isfinite(s)) throw DataError("non-finite score for id " + std::to_string(id));
  }
  // Input is id-ordered, so a stable sort on score alone keeps ascending-id ties.
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<SampleId> out;
  out.reserve(items.size());
  for (const auto& [id, s] : items) out.push_back(id);
  return out;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

}  // namespace

std::vector<SampleId> select_core_set(const std::vector<std::vector<double>>& labeled_features,
                                      const std::map<SampleId, std::vector<double>>& candidates,
                                      std::size_t k) {
  if (candidates.empty()) throw DataError("select_core_set: no candidates");
  if (k > candidates.size()) throw DataError("select_core_set: k exceeds candidate count");

  std::vector<SampleId> ids;
  std::vector<const std::vector<double>*> points;
  for (const auto& [id, x] : candidates) {
    ids.push_back(id);
    points.push_back(&x);
  }
  const std::size_t n = ids.size();
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& l : labeled_features) {
      nearest[i] = std::min(nearest[i], squared_distance(*points[i], l));
    }
  }

  std::vector<bool> taken(n, false);
  std::vector<SampleId> out;
  out.reserve(k);
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best == n || nearest[i] > nearest[best]) best = i;
    }
    taken[best] = true;
    out.push_back(ids[best]);
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i]) nearest[i] = std::min(nearest[i], squared_distance(*points[i], *points[best]));
    }
  }
  return out;
}

double hybrid_score(double uncertainty, double diversity, double beta) {
  if (uncertainty < 0.0 || diversity < 0.0) throw DataError("hybrid_score: negative input");
  if (beta < 0.0 || beta > 1.0) throw ConfigError("hybrid beta must lie in [0, 1]");
  if (beta == 1.0) return uncertainty;
  if (beta == 0.0) return diversity;
  return std::pow(uncertainty, beta) * std::pow(diversity, 1.0 - beta);
}

std::vector<SampleId> random_select(std::span<const SampleId> candidates, std::size_t k,
                                    std::uint64_t rng_seed) {
  if (k > candidates.size()) throw DataError("random_select: k exceeds candidate count");
  std::vector<SampleId> pool(candidates.begin(), candidates.end());
  Rng rng(rng_seed);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return pool;
}

namespace {

FeatureMatrix unlabeled_matrix(const DataPool& pool, std::vector<SampleId>& ids) {
  ids.assign(pool.unlabeled().begin(), pool.unlabeled().end());
  FeatureMatrix x(static_cast<Eigen::Index>(pool.feature_count()),
                  static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto z = pool.normalized(ids[i]);
    x.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
  }
  return x;
}

std::vector<double> epistemic_std(const ModelState& model, const FeatureMatrix& x) {
  if (!model.spec || !model.params) throw ConfigError("model state lacks network parameters");
  const auto dist = mc_predict_batch(*model.params, *model.spec, x, model.mc_passes, model.seed);
  std::vector<double> out(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) out[i] = dist[i].epistemic_std();
  return out;
}

}  // namespace

ScoreMap nearest_labeled_distance(const DataPool& pool) {
  std::vector<std::span<const double>> labeled;
  for (SampleId id : pool.labeled()) labeled.push_back(pool.normalized(id));
  ScoreMap out;
  for (SampleId id : pool.unlabeled()) {
    const auto x = pool.normalized(id);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& l : labeled) best = std::min(best, squared_distance(x, l));
    out.emplace_hint(out.end(), id, std::sqrt(best));
  }
  return out;
}

ScoreMap score_candidates(Strategy strategy, const ModelState& model, const DataPool& pool) {
  std::vector<SampleId> ids;
  const FeatureMatrix x = unlabeled_matrix(pool, ids);
  std::vector<double> scores;
  switch (strategy) {
    case Strategy::kUncertainty:
      scores = epistemic_std(model, x);
      break;
    case Strategy::kQbc: {
      if (!model.committee) throw ConfigError("qbc strategy needs a trained committee");
      scores = committee_disagreement_batch(*model.committee, x);
      for (double& s : scores) s = std::sqrt(s);
      break;
    }
    case Strategy::kHybrid: {
      scores = epistemic_std(model, x);
      const ScoreMap diversity = nearest_labeled_distance(pool);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        scores[i] = hybrid_score(scores[i], diversity.at(ids[i]), model.hybrid_beta);
      }
      break;
    }
    case Strategy::kRandom:
    case Strategy::kCoreset:
      throw ConfigError("strategy '" + std::string(to_string(strategy)) + "' is not score-based");
  }
  ScoreMap out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace_hint(out.end(), ids[i], scores[i]);
  return out;
}

AcquisitionDecision decide_from_ranking(std::span<const SampleId> ranking, const DataPool& pool,
                                        std::size_t batch_size, const Budget& budget,
                                        const CollectPolicy& collect) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  const std::size_t affordable = budget.affordable(budget.annotation_cost());
  if (affordable == 0) throw BudgetExhausted("budget cannot cover another annotation");

  AcquisitionDecision d;
  std::set<SampleId> seen;
  const std::size_t n = std::min({batch_size, affordable, ranking.size()});
  for (std::size_t i = 0; i < n; ++i) {
    const SampleId id = ranking[i];
    if (!pool.is_unlabeled(id)) {
      throw DataError("ranking contains id " + std::to_string(id) + " which is not unlabeled");
    }
    if (!seen.insert(id).second) throw DataError("ranking repeats id " + std::to_string(id));
    d.annotate_ids.push_back(id);
  }
  const double annotation_spend = static_cast<double>(n) * budget.annotation_cost();

  if (collect.enabled && !d.annotate_ids.empty()) {
    const auto wanted = static_cast<std::size_t>(
        std::floor(static_cast<double>(batch_size) * collect.collect_fraction));
    d.collect_count = std::min(wanted, budget.affordable(budget.collection_cost(), annotation_spend));
    if (d.collect_count > 0) {
      Region r;
      r.centroid.assign(pool.feature_count(), 0.0);
      for (SampleId id : d.annotate_ids) {
        const auto z = pool.normalized(id);
        for (std::size_t j = 0; j < z.size(); ++j) r.centroid[j] += z[j];
      }
      for (double& c : r.centroid) c /= static_cast<double>(d.annotate_ids.size());
      for (SampleId id : d.annotate_ids) {
        r.radius = std::max(r.radius, std::sqrt(squared_distance(pool.normalized(id), r.centroid)));
      }
      d.collect_region = std::move(r);
    }
  }
  d.cost = annotation_spend + static_cast<double>(d.collect_count) * budget.collection_cost();
  return d;
}

AcquisitionDecision decide_from_scores(const ScoreMap& scores, const DataPool& pool,
                                       std::size_t batch_size, const Budget& budget,
                                       const CollectPolicy& collect) {
  const auto ranking = rank_uncertainty(scores);
  return decide_from_ranking(ranking, pool, batch_size, budget, collect);
}

AcquisitionDecision decide_acquisition(Strategy strategy, const ModelState& model,
                                       const DataPool& pool, std::size_t batch_size,
                                       const Budget& budget, const CollectPolicy& collect) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (budget.affordable(budget.annotation_cost()) == 0) {
    throw BudgetExhausted("budget cannot cover another annotation");
  }
  const std::size_t k = std::min(batch_size, pool.unlabeled().size());
  std::vector<SampleId> ranking;
  switch (strategy) {
    case Strategy::kRandom: {
      const std::vector<SampleId> ids(pool.unlabeled().begin(), pool.unlabeled().end());
      ranking = random_select(ids, k, model.seed);
      break;
    }
    case Strategy::kCoreset: {
      if (k == 0) break;
      std::vector<std::vector<double>> labeled;
      for (SampleId id : pool.labeled()) {
        const auto z = pool.normalized(id);
        labeled.emplace_back(z.begin(), z.end());
      }
      std::map<SampleId, std::vector<double>> candidates;
      for (SampleId id : pool.unlabeled()) {
        const auto z = pool.normalized(id);
        candidates.emplace_hint(candidates.end(), id, std::vector<double>(z.begin(), z.end()));
      }
      ranking = select_core_set(labeled, candidates, k);
      break;
    }
    default:
      return decide_from_scores(score_candidates(strategy, model, pool), pool, batch_size, budget,
                                collect);
  }
  return decide_from_ranking(ranking, pool, batch_size, budget, collect);
}

}  // namespace netal
