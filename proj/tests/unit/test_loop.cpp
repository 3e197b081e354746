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

#include <cmath>
#include <numeric>
#include <set>

#include "netal/loop.hpp"
#include "test_util.hpp"

using namespace netal;

namespace {

LoopConfig small_config(Strategy s = Strategy::kUncertainty) {
  LoopConfig c;
  c.strategy = s;
  c.batch_size = 4;
  c.iterations = 3;
  c.network = {{19, 16, 16, 1}, 0.2, Activation::kRelu, 1.0};
  c.train_batch_size = 32;
  c.initial_epochs = 20;
  c.finetune_epochs = 3;
  c.mc_passes = 8;
  c.committee_size = 2;
  return c;
}

struct Fixture {
  TwinWorld world = TwinWorld::standard();
  PoolSplit split;

  explicit Fixture(std::size_t n = 400, double seed_fraction = 0.2)
      : split(split_pool(generate_synthetic_dataset(world, n, 21), 0.25, seed_fraction, 5)) {}
};

// Checks conservation and hygiene from the outside.
void check_run(const LoopResult& r, const DataPool& before, const DataPool& after,
               const LoopConfig& c) {
  const auto& rows = r.curve.rows;
  REQUIRE_FALSE(rows.empty());
  r.curve.check_invariants();
  CHECK(rows.front().labeled_count == before.labeled().size());
  std::size_t granted = 0;
  std::set<SampleId> queried;
  for (std::size_t k = 0; k < r.queried.size(); ++k) {
    granted += r.queried[k].size();
    for (SampleId id : r.queried[k]) {
      CHECK(queried.insert(id).second);
      CHECK_FALSE(before.is_test(id));
      CHECK(after.is_labeled(id));
    }
    if (k < rows.size()) CHECK(rows[k].labeled_count == before.labeled().size() + granted);
  }
  CHECK(r.ledger.annotations == granted);
  CHECK(after.test() == before.test());
  for (SampleId id : after.test()) CHECK_FALSE(after.is_labeled(id));
  CHECK(r.budget_spent <= r.budget_total);
  const double expected = static_cast<double>(r.ledger.annotations) * c.annotation_cost +
                          static_cast<double>(r.ledger.collected) * c.collection_cost;
  CHECK(r.budget_spent == doctest::Approx(expected).epsilon(1e-12));
  CHECK(rows.back().budget_spent == doctest::Approx(r.budget_spent).epsilon(1e-6));
  after.check_invariants();
}

}  // namespace

TEST_CASE("rmse and evaluate_rmse") {
  CHECK(rmse(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
  CHECK(rmse(std::vector<double>{0, 0}, std::vector<double>{3, 4}) == doctest::Approx(std::sqrt(12.5)));
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), DataError);

  // A constant network predicting the label mean scores the population std.
  const std::vector<double> labels{3.0, 7.0, 10.0, 12.0};
  const double mean = 8.0;
  double var = 0.0;
  for (double v : labels) var += (v - mean) * (v - mean) / 4.0;
  Learner l{{{1, 1}, 0.0, Activation::kRelu, 1.0}, {}, 0.0, 1.0};
  l.params.layers.push_back({Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Constant(1, mean)});
  CHECK(evaluate_rmse(l, FeatureMatrix::Zero(1, 4), labels) == doctest::Approx(std::sqrt(var)));
  // Output scaling maps network units to Mbps.
  Learner scaled = l;
  scaled.params.layers[0].bias(0) = 1.0;
  scaled.target_offset = 2.0;
  scaled.target_scale = 6.0;
  CHECK(scaled.predict_mbps(FeatureMatrix::Zero(1, 1))(0) == 8.0);
}

TEST_CASE("PoolOracle charges each annotation exactly once") {
  PoolOracle oracle({{3, 10.0}, {4, 20.0}});
  Budget b(1.5, 1.0, 0.25);
  CHECK(oracle.annotate(3, b) == 10.0);
  CHECK(b.spent() == 1.0);
  CHECK_THROWS_AS(oracle.annotate(3, b), OracleError);
  CHECK_THROWS_AS(oracle.annotate(99, b), OracleError);
  CHECK_THROWS_AS(oracle.annotate(4, b), BudgetExhausted);
  CHECK(b.spent() == 1.0);
  CHECK(oracle.ledger().annotations == 1);
  CHECK(oracle.ledger().charged == 1.0);
}

TEST_CASE("PoolOracle collects the reserve samples nearest the region") {
  std::vector<Sample> reserve;
  for (std::size_t i = 0; i < 6; ++i) {
    reserve.push_back({100 + i, {static_cast<double>(i)}, 5.0 * static_cast<double>(i)});
  }
  PoolOracle oracle({}, reserve);
  Normalizer n{{0.0}, {1.0}};
  Budget b(10.0, 1.0, 0.5);
  const auto got = oracle.collect({{3.2}, 1.0}, 2, n, 50, b);
  REQUIRE(got.size() == 2);
  CHECK(got[0].id == 50);
  CHECK(got[1].id == 51);
  CHECK_FALSE(got[0].label.has_value());
  CHECK(got[0].origin == Origin::kCollected);
  std::set<double> xs{got[0].features[0], got[1].features[0]};
  CHECK(xs == std::set<double>{3.0, 4.0});
  CHECK(b.spent() == 1.0);
  // The collected ids can now be annotated with the reserve labels.
  const double label = oracle.annotate(50, b);
  CHECK(label == 5.0 * got[0].features[0]);
  CHECK(oracle.ledger().collected == 2);

  Budget tight(0.6, 1.0, 0.5);
  CHECK(oracle.collect({{0.0}, 1.0}, 3, n, 60, tight).size() == 1);
  PoolOracle none({});
  CHECK(none.collect({{0.0}, 1.0}, 3, n, 60, b).empty());
}

TEST_CASE("pool loop grows the labeled set by exactly the granted annotations") {
  Fixture f;
  auto c = small_config();
  c.iterations = 10;
  DataPool pool = f.split.pool;
  const DataPool before = pool;
  TwinOracle oracle(f.world, f.split.hidden_labels, 3);
  const auto r = run_pool_loop(c, pool, oracle, 7);
  REQUIRE(r.curve.rows.size() == 11);
  CHECK(r.curve.rows.back().labeled_count == before.labeled().size() + 40);
  CHECK(r.seed_ids == std::vector<SampleId>(before.labeled().begin(), before.labeled().end()));
  check_run(r, before, pool, c);
}

TEST_CASE("pool loop stops after a truncated round when the budget runs out") {
  Fixture f;
  auto c = small_config();
  c.budget_total = 2.0;
  c.iterations = 10;
  DataPool pool = f.split.pool;
  const DataPool before = pool;
  PoolOracle oracle(f.split.hidden_labels);
  const auto r = run_pool_loop(c, pool, oracle, 1);
  REQUIRE(r.curve.rows.size() == 2);
  CHECK(r.queried[1].size() == 2);
  CHECK(r.budget_spent == 2.0);
  check_run(r, before, pool, c);
}

TEST_CASE("pool loop stops when the unlabeled set is exhausted") {
  Fixture f(40, 0.5);
  auto c = small_config(Strategy::kRandom);
  c.batch_size = 8;
  c.iterations = 10;
  DataPool pool = f.split.pool;
  const DataPool before = pool;
  PoolOracle oracle(f.split.hidden_labels);
  const auto r = run_pool_loop(c, pool, oracle, 1);
  CHECK(pool.unlabeled().empty());
  CHECK(r.curve.rows.size() == 1 + (before.unlabeled().size() + 7) / 8);
  check_run(r, before, pool, c);
}

TEST_CASE("pool loop is reproducible for every strategy") {
  Fixture f;
  for (Strategy s : {Strategy::kRandom, Strategy::kUncertainty, Strategy::kQbc, Strategy::kCoreset,
                     Strategy::kHybrid}) {
    CAPTURE(to_string(s));
    auto c = small_config(s);
    DataPool p1 = f.split.pool, p2 = f.split.pool;
    const DataPool before = p1;
    PoolOracle o1(f.split.hidden_labels), o2(f.split.hidden_labels);
    const auto a = run_pool_loop(c, p1, o1, 11);
    const auto b = run_pool_loop(c, p2, o2, 11);
    CHECK(a.curve.to_csv() == b.curve.to_csv());
    CHECK(a.queried == b.queried);
    check_run(a, before, p1, c);
  }
}

TEST_CASE("paired strategies share iteration 0") {
  Fixture f;
  DataPool p1 = f.split.pool, p2 = f.split.pool;
  PoolOracle o1(f.split.hidden_labels), o2(f.split.hidden_labels);
  const auto a = run_pool_loop(small_config(Strategy::kUncertainty), p1, o1, 4);
  const auto b = run_pool_loop(small_config(Strategy::kRandom), p2, o2, 4);
  CHECK(a.curve.rows[0] == b.curve.rows[0]);
}

TEST_CASE("pool loop with collection and cold retraining") {
  Fixture f;
  auto c = small_config();
  c.collect = {true, 0.5};
  c.warm_start = false;
  c.persist_optimizer = true;
  DataPool pool = f.split.pool;
  const DataPool before = pool;
  TwinOracle oracle(f.world, f.split.hidden_labels, 8);
  const auto r = run_pool_loop(c, pool, oracle, 2);
  CHECK(r.ledger.collected == 2 * c.iterations);
  CHECK(pool.size() == before.size() + r.ledger.collected);
  for (SampleId id = before.size(); id < pool.size(); ++id) {
    CHECK(pool.sample(id).origin == Origin::kCollected);
    CHECK_FALSE(pool.is_test(id));
  }
  check_run(r, before, pool, c);
}

TEST_CASE("stream loop respects its bounds") {
  Fixture f(600);
  DataPool base = f.split.pool;
  std::vector<SampleId> stream(base.unlabeled().begin(), base.unlabeled().end());

  SUBCASE("high quantile, long window") {
    DataPool pool = base;
    PoolOracle oracle(f.split.hidden_labels);
    const StreamPolicy policy{0.999, 100000, 50, 5};
    const auto r = run_stream_loop(small_config(), pool, stream, oracle, policy, 3);
    std::size_t q = 0;
    for (const auto& d : r.stream_log) q += d.queried;
    CHECK(r.stream_log.size() == stream.size());
    // A 0.999 quantile over all history approaches the running max, so queries
    // are roughly the record highs of the stream: a handful, far below 5%.
    CHECK(q <= stream.size() / 20);
    CHECK(q <= policy.max_queries);
    CHECK(q == r.ledger.annotations);
    check_run(r, base, pool, small_config());
  }
  SUBCASE("max_queries caps the count") {
    DataPool pool = base;
    PoolOracle oracle(f.split.hidden_labels);
    const StreamPolicy policy{0.5, 20, 7, 3};
    const auto r = run_stream_loop(small_config(), pool, stream, oracle, policy, 3);
    CHECK(r.ledger.annotations == 7);
    for (std::size_t i = 0; i < r.stream_log.size(); ++i) CHECK(r.stream_log[i].arrival == i);
    CHECK_FALSE(r.stream_log.front().queried);
  }
  SUBCASE("zero budget never queries and never changes the model") {
    DataPool pool = base;
    PoolOracle oracle(f.split.hidden_labels);
    auto c = small_config();
    c.budget_total = 0.0;
    const auto r = run_stream_loop(c, pool, stream, oracle, {0.5, 20, 100, 3}, 3);
    CHECK(r.ledger.annotations == 0);
    CHECK(r.budget_spent == 0.0);
    for (const auto& row : r.curve.rows) CHECK(row.test_rmse == r.curve.rows.front().test_rmse);
  }
  SUBCASE("threshold is a quantile of earlier scores") {
    DataPool pool = base;
    PoolOracle oracle(f.split.hidden_labels);
    const StreamPolicy policy{0.8, 10, 1000, 1000};
    const auto r = run_stream_loop(small_config(), pool, stream, oracle, policy, 3);
    for (std::size_t i = 1; i < r.stream_log.size(); ++i) {
      const std::size_t lo = i > 10 ? i - 10 : 0;
      std::vector<double> w;
      for (std::size_t j = lo; j < i; ++j) w.push_back(r.stream_log[j].score);
      std::sort(w.begin(), w.end());
      const double h = 0.8 * static_cast<double>(w.size() - 1);
      const auto k = static_cast<std::size_t>(std::floor(h));
      const double q = k + 1 < w.size() ? w[k] + (h - k) * (w[k + 1] - w[k]) : w[k];
      CHECK(r.stream_log[i].threshold == doctest::Approx(q).epsilon(1e-12));
      CHECK(r.stream_log[i].queried == (r.stream_log[i].score > q));
    }
  }
}

TEST_CASE("synthesis loop against the twin") {
  Fixture f;
  const FeatureMatrix probe = probe_grid(f.world, 50, 1);
  SUBCASE("candidates equal to batch accept every proposal") {
    DataPool pool = f.split.pool;
    const DataPool before = pool;
    TwinOracle oracle(f.world, f.split.hidden_labels, 2);
    auto c = small_config();
    const auto r = run_synthesis_loop(c, pool, oracle, {3, 10, c.batch_size}, &probe, 6);
    REQUIRE(r.curve.rows.size() == c.iterations + 1);
    for (std::size_t k = 1; k < r.queried.size(); ++k) CHECK(r.queried[k].size() == c.batch_size);
    for (std::size_t k = 1; k < r.queried.size(); ++k) {
      for (SampleId id : r.queried[k]) CHECK(pool.sample(id).origin == Origin::kSynthesized);
    }
    CHECK(r.budget_spent ==
          doctest::Approx(static_cast<double>(c.iterations * c.batch_size) *
                          (c.annotation_cost + c.collection_cost)));
    check_run(r, before, pool, c);
  }
  SUBCASE("no dropout still terminates normally") {
    DataPool pool = f.split.pool;
    TwinOracle oracle(f.world, f.split.hidden_labels, 2);
    auto c = small_config();
    c.network.dropout_rate = 0.0;
    const auto r = run_synthesis_loop(c, pool, oracle, {3, 10, 32}, &probe, 6);
    CHECK(r.curve.rows.size() == c.iterations + 1);
    for (const auto& row : r.curve.rows) CHECK(row.mean_epistemic_std == 0.0);
  }
}

TEST_CASE("synthesis loop without a twin snaps proposals to the pool") {
  Fixture f;
  DataPool pool = f.split.pool;
  const DataPool before = pool;
  pool.set_normalizer(fit_normalizer(pool));
  PoolOracle labels(f.split.hidden_labels);
  SnapToPoolOracle oracle(labels, pool);
  auto c = small_config();
  const auto r = run_synthesis_loop(c, pool, oracle, {3, 10, 32}, nullptr, 6);
  CHECK(pool.size() == before.size());
  for (std::size_t k = 1; k < r.queried.size(); ++k) {
    CHECK(r.queried[k].size() == c.batch_size);
    for (SampleId id : r.queried[k]) CHECK(before.is_unlabeled(id));
  }
  CHECK(r.ledger.annotations == c.iterations * c.batch_size);
  check_run(r, before, pool, c);
}

TEST_CASE("LearningCurve CSV and invariants") {
  LearningCurve curve;
  curve.rows.push_back({0, 10, 0.0, 389.123456789, 12.5, 1000.0});
  curve.rows.push_back({1, 14, 4.0, 365.0, 11.0, 990.0});
  const std::string csv = curve.to_csv();
  CHECK(csv == std::string(LearningCurve::kHeader) +
                   "\n0,10,0,389.123,12.5,1000\n1,14,4,365,11,990\n");
  curve.check_invariants();
  auto bad = curve;
  bad.rows[1].labeled_count = 9;
  CHECK_THROWS_AS(bad.check_invariants(), Error);
  bad = curve;
  bad.rows[1].iteration = 0;
  CHECK_THROWS_AS(bad.check_invariants(), Error);

  netal::testing::TempDir dir("curve");
  curve.write_csv(dir.path() / "c.csv");
  CHECK(netal::testing::read_file(dir.path() / "c.csv") == csv);
}
