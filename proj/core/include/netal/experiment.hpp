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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netal/loop.hpp"

namespace netal {

enum class DataSource { kSynthetic, kCsv };
enum class LoopKind { kPool, kStream, kSynthesis };

struct ExperimentConfig {
  DataSource data_source = DataSource::kSynthetic;
  std::filesystem::path csv_path;
  std::string target_column = synth_schema::kTargetName;
  std::vector<std::string> feature_columns;  // empty = auto
  std::filesystem::path category_map;

  std::size_t synthetic_samples = 5000;
  std::uint64_t synthetic_seed = 7;
  TwinWorld world = TwinWorld::standard();

  double test_fraction = 0.2;
  double seed_labeled_fraction = 0.2;

  LoopKind loop = LoopKind::kPool;
  std::vector<Strategy> strategies{Strategy::kUncertainty, Strategy::kRandom};
  LoopConfig loop_config;
  std::vector<std::size_t> hidden_layers{64, 64};

  StreamPolicy stream;
  std::size_t stream_length = 1000;
  SynthesisOptions synthesis;
  std::size_t probe_points = 200;

  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::filesystem::path output_dir = "out";

  std::optional<double> reference_initial_rmse;
  std::map<std::string, double> reference_final_rmse;  // strategy token -> value
};

// Flat `key = value` format, `#` comments, unknown keys rejected. Missing keys
// keep their defaults. Relative paths resolve against the config's directory.
// Errors are ConfigError naming file and line.
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<config>",
                                   const std::filesystem::path& base_dir = {});

// Range checks that also apply after command-line overrides.
void validate_config(const ExperimentConfig& config);

// Every key with its resolved value, in the same format parse_config reads.
std::string render_config(const ExperimentConfig& config);

struct RunRecord {
  Strategy strategy;
  std::uint64_t seed;
  std::filesystem::path curve_file;
  LoopResult result;
  DataPool pool;  // partition state after the run
};

struct ExperimentReport {
  std::vector<RunRecord> runs;
  std::filesystem::path summary_file;
};

// Runs every (seed, strategy) pair and writes, under output_dir:
// resolved_config.txt, curve_<strategy>_seed<N>.csv,
// queries_<strategy>_seed<N>.csv, stream_<strategy>_seed<N>.csv (stream loop
// only) and summary.csv.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Writes geo_<run>.csv (iteration,id,lon,lat,status) next to each
// queries_<run>.csv in `run_dir`; returns the files written.
std::vector<std::filesystem::path> export_query_geography(const std::filesystem::path& run_dir,
                                                          std::size_t lon_feature,
                                                          std::size_t lat_feature);

// Loads the dataset an experiment would use (synthetic or CSV).
std::vector<Sample> load_experiment_samples(const ExperimentConfig& config,
                                            std::vector<std::string>* feature_names = nullptr);

}  // namespace netal
