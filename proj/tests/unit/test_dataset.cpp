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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "netal/dataset.hpp"
#include "test_util.hpp"

using netal::DataError;
using netal::DataPool;
using netal::Sample;
using netal::SampleId;
using netal::testing::TempDir;

namespace {

std::vector<Sample> make_samples(std::size_t n, std::size_t features = 2) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.id = i;
    for (std::size_t j = 0; j < features; ++j) s.features.push_back(static_cast<double>(i * 10 + j));
    s.label = static_cast<double>(i);
    out.push_back(s);
  }
  return out;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("load_csv parses a small file") {
  TempDir dir("csv");
  const auto path = dir.write("t.csv", "a,b,tput\n1,2,10\n3,4,20\n5,6,30\n");
  const auto data = netal::load_csv(path, {.target_column = "tput"});
  REQUIRE(data.samples.size() == 3);
  CHECK(data.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(data.dropped_rows == 0);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& s = data.samples[i];
    CHECK(s.id == i);
    CHECK(s.features.size() == 2);
    CHECK(*s.label == 10.0 * static_cast<double>(i + 1));
    CHECK(s.origin == netal::Origin::kIngested);
  }
  CHECK(data.samples[2].features == std::vector<double>{5, 6});
}

TEST_CASE("load_csv names line and column of a non-numeric cell") {
  TempDir dir("csv");
  const auto path = dir.write("t.csv", "a,b,tput\n1,2,10\n3,oops,20\n");
  const std::string msg = message_of([&] {
    netal::load_csv(path, {.target_column = "tput", .feature_columns = {"a", "b"}});
  });
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("'b'") != std::string::npos);
  CHECK(msg.find("oops") != std::string::npos);
}

TEST_CASE("load_csv auto mode skips non-numeric columns and maps categories") {
  TempDir dir("csv");
  const auto path =
      dir.write("t.csv", "name,mode,x,tput\nu,walking,1.5,10\nv,driving,2.5,20\n");
  auto plain = netal::load_csv(path, {.target_column = "tput"});
  CHECK(plain.feature_names == std::vector<std::string>{"x"});

  netal::CsvOptions opts{.target_column = "tput", .categories = {{"walking", 0}, {"driving", 1}}};
  auto mapped = netal::load_csv(path, opts);
  CHECK(mapped.feature_names == std::vector<std::string>{"mode", "x"});
  CHECK(mapped.samples[1].features == std::vector<double>{1.0, 2.5});
}

TEST_CASE("load_csv drops and counts rows with missing values") {
  TempDir dir("csv");
  const auto path = dir.write("t.csv", "a,tput\n1,10\n,20\nNA,30\n4,\n5,50\n");
  const auto data = netal::load_csv(path, {.target_column = "tput"});
  CHECK(data.samples.size() == 2);
  CHECK(data.dropped_rows == 3);
  CHECK(data.samples[1].id == 1);
  CHECK(*data.samples[1].label == 50.0);
}

TEST_CASE("load_csv error cases") {
  TempDir dir("csv");
  CHECK_THROWS_AS(netal::load_csv(dir.path() / "missing.csv", {.target_column = "y"}), DataError);
  const auto no_target = dir.write("a.csv", "a,b\n1,2\n");
  CHECK_THROWS_AS(netal::load_csv(no_target, {.target_column = "y"}), DataError);
  const auto negative = dir.write("b.csv", "a,y\n1,-2\n");
  CHECK_THROWS_AS(netal::load_csv(negative, {.target_column = "y"}), DataError);
  const auto ragged = dir.write("c.csv", "a,y\n1,2,3\n");
  CHECK_THROWS_AS(netal::load_csv(ragged, {.target_column = "y"}), DataError);
  const auto quoted = dir.write("d.csv", "\"a\",\"y\"\n\"1\",\"2\"\n");
  CHECK(netal::load_csv(quoted, {.target_column = "y"}).samples.size() == 1);
}

TEST_CASE("load_category_map reads name=integer lines") {
  TempDir dir("map");
  const auto path = dir.write("m.txt", "# modes\nwalking=0\n\ndriving = 1\n");
  const auto m = netal::load_category_map(path);
  CHECK(m.size() == 2);
  CHECK(m.at("driving") == 1.0);
  const auto bad = dir.write("bad.txt", "walking=slow\n");
  CHECK_THROWS_AS(netal::load_category_map(bad), DataError);
}

TEST_CASE("split_pool floor arithmetic") {
  auto split = netal::split_pool(make_samples(100), 0.2, 0.2, 3);
  CHECK(split.pool.test().size() == 20);
  CHECK(split.pool.labeled().size() == 16);
  CHECK(split.pool.unlabeled().size() == 64);
  CHECK(split.hidden_labels.size() == 64);
  split.pool.check_invariants();

  // Case-study scale, without materialising features.
  auto big = netal::split_pool(make_samples(68118, 1), 0.2, 0.2, 1);
  CHECK(big.pool.test().size() == 13623);
  CHECK(big.pool.labeled().size() == 10899);
  CHECK(big.pool.unlabeled().size() == 43596);
}

TEST_CASE("split_pool hides unlabeled labels and is deterministic") {
  const auto samples = make_samples(50);
  const auto a = netal::split_pool(samples, 0.3, 0.5, 11);
  const auto b = netal::split_pool(samples, 0.3, 0.5, 11);
  CHECK(a.pool.labeled() == b.pool.labeled());
  CHECK(a.pool.test() == b.pool.test());
  CHECK(a.hidden_labels == b.hidden_labels);
  for (auto id : a.pool.unlabeled()) {
    CHECK_FALSE(a.pool.sample(id).label.has_value());
    CHECK(a.hidden_labels.at(id) == static_cast<double>(id));
  }
  const auto c = netal::split_pool(samples, 0.3, 0.5, 12);
  CHECK(c.pool.test() != a.pool.test());
}

TEST_CASE("split_pool rejects degenerate inputs") {
  CHECK_THROWS_AS(netal::split_pool(make_samples(9), 0.2, 0.2, 1), DataError);
  CHECK_THROWS_AS(netal::split_pool(make_samples(100), 0.0, 0.2, 1), DataError);
  CHECK_THROWS_AS(netal::split_pool(make_samples(100), 0.2, 1.0, 1), DataError);
  // floor(10 * 0.05) = 0 test samples.
  CHECK_THROWS_AS(netal::split_pool(make_samples(10), 0.05, 0.5, 1), DataError);
}

TEST_CASE("fit_normalizer two-point and constant features") {
  std::vector<Sample> s(2);
  s[0] = {0, {0.0, 5.0}, 1.0};
  s[1] = {1, {2.0, 5.0}, 1.0};
  DataPool pool(s, {0, 1}, {}, {});
  const auto n = netal::fit_normalizer(pool);
  CHECK(n.means == std::vector<double>{1.0, 5.0});
  CHECK(n.stds[0] == 1.0);
  CHECK(n.stds[1] == netal::Normalizer::kMinStd);
  CHECK(n.normalize(std::vector<double>{5.0, 5.0})[1] == 0.0);
}

TEST_CASE("fit_normalizer standardizes labeled and unlabeled features") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> dist(3.0, 7.0);
  std::vector<Sample> s;
  for (std::size_t i = 0; i < 1000; ++i) s.push_back({i, {dist(rng)}, std::abs(dist(rng))});
  Sample t{1000, {1e6}, 1.0};  // extreme test point must not move the statistics
  s.push_back(t);
  std::set<SampleId> labeled, unlabeled;
  for (std::size_t i = 0; i < 1000; ++i) (i % 3 == 0 ? labeled : unlabeled).insert(i);
  for (auto id : unlabeled) s[id].label.reset();
  DataPool pool(s, labeled, unlabeled, {1000});
  const auto n = netal::fit_normalizer(pool);

  double mean = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) mean += n.normalize(s[i].features)[0];
  mean /= 1000.0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const double z = n.normalize(s[i].features)[0];
    sq += (z - mean) * (z - mean);
  }
  CHECK(std::abs(mean) < 1e-6);
  CHECK(std::abs(std::sqrt(sq / 1000.0) - 1.0) < 1e-6);

  for (std::size_t i = 0; i < 20; ++i) {
    const auto back = n.denormalize(n.normalize(s[i].features));
    CHECK(std::abs(back[0] - s[i].features[0]) < 1e-9);
  }
}

TEST_CASE("DataPool reveal and append keep the partition consistent") {
  auto split = netal::split_pool(make_samples(40), 0.25, 0.2, 9);
  auto& pool = split.pool;
  pool.set_normalizer(netal::fit_normalizer(pool));
  const SampleId u = *pool.unlabeled().begin();
  const SampleId t = *pool.test().begin();

  CHECK_THROWS_AS(pool.reveal(t, 1.0), DataError);
  CHECK_THROWS_AS(pool.reveal(u, -1.0), DataError);
  pool.reveal(u, split.hidden_labels.at(u), 2);
  CHECK(pool.is_labeled(u));
  CHECK(pool.sample(u).iteration_acquired == 2);
  CHECK_THROWS_AS(pool.reveal(u, 1.0), DataError);

  Sample extra{pool.next_id(), {1.0, 2.0}, 7.0, netal::Origin::kCollected};
  const auto id = pool.add_unlabeled(extra);
  CHECK_FALSE(pool.sample(id).label.has_value());
  CHECK(pool.normalized(id).size() == 2);
  Sample wrong{pool.next_id() + 1, {1.0, 2.0}, 7.0};
  CHECK_THROWS_AS(pool.add_labeled(wrong), DataError);
  Sample short_row{pool.next_id(), {1.0}, 7.0};
  CHECK_THROWS_AS(pool.add_labeled(short_row), DataError);
  pool.check_invariants();
}

TEST_CASE("DataPool construction rejects overlapping partitions") {
  auto s = make_samples(4);
  CHECK_THROWS_AS(DataPool(s, {0, 1}, {1}, {2}), DataError);
  CHECK_THROWS_AS(DataPool(s, {0}, {1}, {7}), DataError);
}
