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
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "netal/common.hpp"

namespace netal {

enum class Origin { kIngested, kCollected, kSynthesized };

struct Sample {
  SampleId id = 0;
  std::vector<double> features;
  std::optional<double> label;  // throughput, Mbps
  Origin origin = Origin::kIngested;
  std::optional<int> iteration_acquired;
};

// Per-feature standardization. Stds are clamped below at kMinStd so constant
// features map to 0 instead of dividing by zero.
struct Normalizer {
  static constexpr double kMinStd = 1e-8;

  std::vector<double> means;
  std::vector<double> stds;

  std::size_t size() const { return means.size(); }
  std::vector<double> normalize(std::span<const double> x) const;
  std::vector<double> denormalize(std::span<const double> z) const;
};

// Labeled / unlabeled / test partition over an id-indexed sample store.
//
// Ids are dense: sample(id) lives at position id. Unlabeled samples carry no
// label in the store; their ground truth belongs to an oracle. The test set is
// fixed at construction.
class DataPool {
 public:
  DataPool() = default;
  DataPool(std::vector<Sample> samples, std::set<SampleId> labeled,
           std::set<SampleId> unlabeled, std::set<SampleId> test);

  std::size_t size() const { return samples_.size(); }
  std::size_t feature_count() const { return feature_count_; }
  SampleId next_id() const { return samples_.size(); }

  const Sample& sample(SampleId id) const;
  const std::vector<Sample>& samples() const { return samples_; }
  const std::set<SampleId>& labeled() const { return labeled_; }
  const std::set<SampleId>& unlabeled() const { return unlabeled_; }
  const std::set<SampleId>& test() const { return test_; }

  bool is_labeled(SampleId id) const { return labeled_.contains(id); }
  bool is_unlabeled(SampleId id) const { return unlabeled_.contains(id); }
  bool is_test(SampleId id) const { return test_.contains(id); }

  // Moves an unlabeled id into the labeled set with its revealed label.
  void reveal(SampleId id, double label, std::optional<int> iteration = std::nullopt);

  // Appends a sample whose id must equal next_id(). add_unlabeled drops any
  // label the sample carries.
  SampleId add_unlabeled(Sample s);
  SampleId add_labeled(Sample s);

  // Installs a normalizer and caches normalized features for every sample,
  // including ones appended later.
  void set_normalizer(Normalizer n);
  const std::optional<Normalizer>& normalizer() const { return normalizer_; }
  std::span<const double> normalized(SampleId id) const;

  // Throws DataError if disjointness, coverage or label presence is broken.
  void check_invariants() const;

 private:
  SampleId append(Sample s);

  std::vector<Sample> samples_;
  std::set<SampleId> labeled_;
  std::set<SampleId> unlabeled_;
  std::set<SampleId> test_;
  std::size_t feature_count_ = 0;
  std::optional<Normalizer> normalizer_;
  std::vector<double> normalized_;  // row-major, size() x feature_count()
};

struct PoolSplit {
  DataPool pool;
  std::map<SampleId, double> hidden_labels;  // ground truth of the unlabeled set
};

// Seeded uniform shuffle, then floor(n*test_fraction) ids go to test and
// floor(rest*seed_labeled_fraction) to labeled; the remainder is unlabeled
// with labels moved into PoolSplit::hidden_labels.
PoolSplit split_pool(std::vector<Sample> samples, double test_fraction,
                     double seed_labeled_fraction, std::uint64_t rng_seed);

// Mean/std over labeled and unlabeled features (test excluded).
Normalizer fit_normalizer(const DataPool& pool);

struct CsvOptions {
  std::string target_column;
  std::vector<std::string> feature_columns;  // empty selects every numeric non-target column
  std::map<std::string, double> categories;  // value -> code for categorical cells
};

struct CsvDataset {
  std::vector<std::string> feature_names;
  std::vector<Sample> samples;
  std::size_t dropped_rows = 0;  // rows with a missing value in a used column
};

CsvDataset load_csv(const std::filesystem::path& path, const CsvOptions& options);

// Reads `name=integer` lines; blank lines and `#` comments are skipped.
std::map<std::string, double> load_category_map(const std::filesystem::path& path);

}  // namespace netal
