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

// netal: run active-learning experiments, generate synthetic drive-test data
// and export the geography of acquired samples.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 runtime error.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "netal/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> batch_size;
  std::optional<std::string> output;
};

struct SynthArgs {
  std::string config;
  std::size_t n = 0;
  std::string out;
};

struct GeoArgs {
  std::string run;
  std::size_t lon_col = 0;
  std::size_t lat_col = 0;
};

int cmd_run(const RunArgs& a) {
  netal::ExperimentConfig config = netal::parse_config(a.config);
  if (a.seed) config.seeds = {*a.seed};
  if (a.strategy) config.strategies = {netal::parse_strategy(*a.strategy)};
  if (a.iterations) config.loop_config.iterations = *a.iterations;
  if (a.batch_size) {
    if (*a.batch_size == 0) throw netal::ConfigError("--batch-size must be at least 1");
    config.loop_config.batch_size = *a.batch_size;
  }
  if (a.output) config.output_dir = *a.output;
  netal::validate_config(config);

  const auto report = netal::run_experiment(config);
  for (const auto& run : report.runs) {
    const auto& rows = run.result.curve.rows;
    std::printf("%-12s seed %-6llu rmse %.4g -> %.4g  labeled %zu  spent %.6g\n",
                std::string(netal::to_string(run.strategy)).c_str(),
                static_cast<unsigned long long>(run.seed), rows.front().test_rmse,
                rows.back().test_rmse, rows.back().labeled_count, rows.back().budget_spent);
  }
  std::printf("summary: %s\n", report.summary_file.string().c_str());
  return kExitOk;
}

int cmd_synth(const SynthArgs& a) {
  const netal::ExperimentConfig config = netal::parse_config(a.config);
  if (a.n < 10) throw netal::ConfigError("--n must be at least 10");
  const auto samples = netal::generate_synthetic_dataset(config.world, a.n, config.synthetic_seed);
  netal::write_synthetic_csv(a.out, samples);
  std::printf("wrote %zu samples to %s\n", samples.size(), a.out.c_str());
  return kExitOk;
}

int cmd_geo(const GeoArgs& a) {
  for (const auto& path : netal::export_query_geography(a.run, a.lon_col, a.lat_col)) {
    std::printf("%s\n", path.string().c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active learning for network throughput prediction"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment described by a config file");
  run_cmd->add_option("--config", run.config, "Config file")->required();
  run_cmd->add_option("--seed", run.seed, "Run a single master seed");
  run_cmd->add_option("--strategy", run.strategy,
                      "Run a single strategy (random, uncertainty, qbc, coreset, hybrid)");
  run_cmd->add_option("--iterations", run.iterations, "Acquisition rounds");
  run_cmd->add_option("--batch-size", run.batch_size, "Samples acquired per round");
  run_cmd->add_option("--output", run.output, "Output directory");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic drive-test CSV");
  synth_cmd->add_option("--config", synth.config, "Config file (world and synthetic_seed)")->required();
  synth_cmd->add_option("--n", synth.n, "Number of samples")->required();
  synth_cmd->add_option("--out", synth.out, "Output CSV path")->required();

  GeoArgs geo;
  auto* geo_cmd = app.add_subcommand("geo", "Export query locations for a finished run");
  geo_cmd->add_option("--run", geo.run, "Run output directory")->required();
  geo_cmd->add_option("--lon-col", geo.lon_col, "Feature index used as longitude")->required();
  geo_cmd->add_option("--lat-col", geo.lat_col, "Feature index used as latitude")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*synth_cmd) return cmd_synth(synth);
    if (*geo_cmd) return cmd_geo(geo);
  } catch (const netal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
