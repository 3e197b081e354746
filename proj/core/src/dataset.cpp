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

#include "netal/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>

namespace netal {

std::vector<double> Normalizer::normalize(std::span<const double> x) const {
  if (x.size() != means.size()) throw DataError("normalize: feature length mismatch");
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - means[j]) / stds[j];
  return z;
}

std::vector<double> Normalizer::denormalize(std::span<const double> z) const {
  if (z.size() != means.size()) throw DataError("denormalize: feature length mismatch");
  std::vector<double> x(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) x[j] = z[j] * stds[j] + means[j];
  return x;
}

DataPool::DataPool(std::vector<Sample> samples, std::set<SampleId> labeled,
                   std::set<SampleId> unlabeled, std::set<SampleId> test)
    : samples_(std::move(samples)),
      labeled_(std::move(labeled)),
      unlabeled_(std::move(unlabeled)),
      test_(std::move(test)) {
  if (!samples_.empty()) feature_count_ = samples_.front().features.size();
  for (SampleId id : unlabeled_) {
    if (id < samples_.size()) samples_[id].label.reset();
  }
  check_invariants();
}

const Sample& DataPool::sample(SampleId id) const {
  if (id >= samples_.size()) throw DataError("unknown sample id " + std::to_string(id));
  return samples_[id];
}

void DataPool::reveal(SampleId id, double label, std::optional<int> iteration) {
  if (!unlabeled_.contains(id)) {
    throw DataError("reveal: id " + std::to_string(id) + " is not in the unlabeled set");
  }
  if (!std::isfinite(label) || label < 0) {
    throw DataError("reveal: label for id " + std::to_string(id) + " must be finite and >= 0");
  }
  unlabeled_.erase(id);
  labeled_.insert(id);
  samples_[id].label = label;
  samples_[id].iteration_acquired = iteration;
}

SampleId DataPool::append(Sample s) {
  if (s.id != next_id()) {
    throw DataError("append: expected id " + std::to_string(next_id()) + ", got " +
                    std::to_string(s.id));
  }
  if (samples_.empty() && feature_count_ == 0) feature_count_ = s.features.size();
  if (s.features.size() != feature_count_) throw DataError("append: feature length mismatch");
  if (normalizer_) {
    auto z = normalizer_->normalize(s.features);
    normalized_.insert(normalized_.end(), z.begin(), z.end());
  }
  samples_.push_back(std::move(s));
  return samples_.back().id;
}

SampleId DataPool::add_unlabeled(Sample s) {
  s.label.reset();
  const SampleId id = append(std::move(s));
  unlabeled_.insert(id);
  return id;
}

SampleId DataPool::add_labeled(Sample s) {
  if (!s.label || !std::isfinite(*s.label) || *s.label < 0) {
    throw DataError("add_labeled: sample needs a finite non-negative label");
  }
  const SampleId id = append(std::move(s));
  labeled_.insert(id);
  return id;
}

void DataPool::set_normalizer(Normalizer n) {
  if (n.size() != feature_count_) throw DataError("set_normalizer: dimension mismatch");
  normalized_.clear();
  normalized_.reserve(samples_.size() * feature_count_);
  for (const auto& s : samples_) {
    auto z = n.normalize(s.features);
    normalized_.insert(normalized_.end(), z.begin(), z.end());
  }
  normalizer_ = std::move(n);
}

std::span<const double> DataPool::normalized(SampleId id) const {
  if (!normalizer_) throw DataError("normalized: no normalizer installed");
  if (id >= samples_.size()) throw DataError("unknown sample id " + std::to_string(id));
  return {normalized_.data() + id * feature_count_, feature_count_};
}

void DataPool::check_invariants() const {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i].id != i) throw DataError("pool ids must be dense and ordered");
    if (samples_[i].features.size() != feature_count_) {
      throw DataError("sample " + std::to_string(i) + " has inconsistent feature length");
    }
  }
  auto in_store = [&](const std::set<SampleId>& ids, const char* name) {
    if (!ids.empty() && *ids.rbegin() >= samples_.size()) {
      throw DataError(std::string(name) + " set references an id outside the store");
    }
  };
  in_store(labeled_, "labeled");
  in_store(unlabeled_, "unlabeled");
  in_store(test_, "test");
  for (SampleId id : labeled_) {
    if (unlabeled_.contains(id) || test_.contains(id)) {
      throw DataError("partitions overlap at id " + std::to_string(id));
    }
    if (!samples_[id].label) throw DataError("labeled id " + std::to_string(id) + " has no label");
  }
  for (SampleId id : unlabeled_) {
    if (test_.contains(id)) throw DataError("partitions overlap at id " + std::to_string(id));
    if (samples_[id].label) {
      throw DataError("unlabeled id " + std::to_string(id) + " exposes its label");
    }
  }
  for (SampleId id : test_) {
    if (!samples_[id].label) throw DataError("test id " + std::to_string(id) + " has no label");
  }
}

PoolSplit split_pool(std::vector<Sample> samples, double test_fraction,
                     double seed_labeled_fraction, std::uint64_t rng_seed) {
  const std::size_t n = samples.size();
  if (n < 10) throw DataError("split_pool: need at least 10 samples, got " + std::to_string(n));
  auto in_open_unit = [](double f) { return f > 0.0 && f < 1.0; };
  if (!in_open_unit(test_fraction) || !in_open_unit(seed_labeled_fraction)) {
    throw DataError("split_pool: fractions must lie in (0, 1)");
  }

  std::vector<SampleId> order(n);
  std::iota(order.begin(), order.end(), SampleId{0});
  Rng rng(rng_seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction));
  const std::size_t n_train = n - n_test;
  const auto n_labeled =
      static_cast<std::size_t>(std::floor(static_cast<double>(n_train) * seed_labeled_fraction));
  if (n_test == 0 || n_labeled == 0 || n_labeled == n_train) {
    throw DataError("split_pool: fractions produce an empty partition");
  }

  PoolSplit out;
  std::set<SampleId> test(order.begin(), order.begin() + n_test);
  std::set<SampleId> labeled(order.begin() + n_test, order.begin() + n_test + n_labeled);
  std::set<SampleId> unlabeled(order.begin() + n_test + n_labeled, order.end());
  for (SampleId id : unlabeled) {
    if (samples[id].label) out.hidden_labels.emplace(id, *samples[id].label);
  }
  out.pool = DataPool(std::move(samples), std::move(labeled), std::move(unlabeled), std::move(test));
  return out;
}

Normalizer fit_normalizer(const DataPool& pool) {
  const std::size_t f = pool.feature_count();
  const std::size_t count = pool.labeled().size() + pool.unlabeled().size();
  if (count == 0) throw DataError("fit_normalizer: pool has no training samples");

  Normalizer n;
  n.means.assign(f, 0.0);
  n.stds.assign(f, 0.0);
  auto each = [&](auto&& fn) {
    for (SampleId id : pool.labeled()) fn(pool.sample(id).features);
    for (SampleId id : pool.unlabeled()) fn(pool.sample(id).features);
  };
  each([&](const std::vector<double>& x) {
    for (std::size_t j = 0; j < f; ++j) n.means[j] += x[j];
  });
  for (double& m : n.means) m /= static_cast<double>(count);
  each([&](const std::vector<double>& x) {
    for (std::size_t j = 0; j < f; ++j) {
      const double d = x[j] - n.means[j];
      n.stds[j] += d * d;
    }
  });
  for (double& s : n.stds) {
    s = std::max(std::sqrt(s / static_cast<double>(count)), Normalizer::kMinStd);
  }
  return n;
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  for (auto& s : cells) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t\r");
    s = (b == std::string::npos) ? std::string{} : s.substr(b, e - b + 1);
  }
  return cells;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "null" ||
         cell == "NULL";
}

std::optional<double> parse_number(const std::string& cell) {
  double v = 0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<double> parse_cell(const std::string& cell,
                                 const std::map<std::string, double>& categories) {
  if (auto v = parse_number(cell)) return v;
  if (auto it = categories.find(cell); it != categories.end()) return it->second;
  return std::nullopt;
}

}  // namespace

CsvDataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV file '" + path.string() + "' has no header");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);

  auto column_index = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError("column '" + name + "' not found in header of '" + path.string() + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t target = column_index(options.target_column);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    }
    rows.push_back(std::move(cells));
    line_numbers.push_back(line_no);
  }

  std::vector<std::size_t> columns;
  if (options.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == target) continue;
      bool numeric = false;
      bool all_ok = true;
      for (const auto& row : rows) {
        if (is_missing(row[c])) continue;
        if (!parse_cell(row[c], options.categories)) {
          all_ok = false;
          break;
        }
        numeric = true;
      }
      if (numeric && all_ok) columns.push_back(c);
    }
  } else {
    for (const auto& name : options.feature_columns) {
      const std::size_t c = column_index(name);
      if (c == target) throw DataError("target column '" + name + "' listed as a feature");
      columns.push_back(c);
    }
  }
  if (columns.empty()) throw DataError("no usable feature columns in '" + path.string() + "'");

  CsvDataset out;
  for (std::size_t c : columns) out.feature_names.push_back(header[c]);
  out.samples.reserve(rows.size());

  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    bool missing = is_missing(row[target]);
    for (std::size_t c : columns) missing = missing || is_missing(row[c]);
    if (missing) {
      ++out.dropped_rows;
      continue;
    }
    auto fail = [&](std::size_t c) {
      return DataError("line " + std::to_string(line_numbers[r]) + ", column '" + header[c] +
                       "': non-numeric value '" + row[c] + "' with no categorical mapping");
    };
    Sample s;
    s.id = out.samples.size();
    s.features.reserve(columns.size());
    for (std::size_t c : columns) {
      auto v = parse_cell(row[c], options.categories);
      if (!v) throw fail(c);
      s.features.push_back(*v);
    }
    auto y = parse_number(row[target]);
    if (!y) throw fail(target);
    if (*y < 0) {
      throw DataError("line " + std::to_string(line_numbers[r]) + ": negative target value");
    }
    s.label = *y;
    out.samples.push_back(std::move(s));
  }
  return out;
}

std::map<std::string, double> load_category_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open category map '" + path.string() + "'");
  std::map<std::string, double> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected name=integer");
    }
    auto trim = [](std::string s) {
      const auto l = s.find_first_not_of(" \t\r");
      const auto r = s.find_last_not_of(" \t\r");
      return l == std::string::npos ? std::string{} : s.substr(l, r - l + 1);
    };
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    long long code = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), code);
    if (name.empty() || ec != std::errc{} || ptr != value.data() + value.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected name=integer");
    }
    out[name] = static_cast<double>(code);
  }
  return out;
}

}  // namespace netal
