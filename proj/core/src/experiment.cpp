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

#include "netal/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>

namespace netal {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const char* first = v.data();
  if (!v.empty() && v[0] == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": '" + v + "' is not a number");
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": '" + v + "' must be a non-negative integer");
  }
  return out;
}

std::size_t to_positive(const std::string& key, const std::string& v) {
  const auto n = to_uint(key, v);
  if (n == 0) throw ConfigError(key + ": must be at least 1");
  return static_cast<std::size_t>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

double in_range(const std::string& key, double v, double lo, double hi, bool open_lo, bool open_hi) {
  const bool ok = (open_lo ? v > lo : v >= lo) && (open_hi ? v < hi : v <= hi);
  if (!ok) {
    throw ConfigError(key + ": " + fmt_double(v) + " outside " + (open_lo ? "(" : "[") +
                      fmt_double(lo) + ", " + fmt_double(hi) + (open_hi ? ")" : "]"));
  }
  return v;
}

template <typename T>
std::string join(const std::vector<T>& items, auto&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + fmt(items[i]);
  return out;
}

std::string_view to_string(LoopKind k) {
  switch (k) {
    case LoopKind::kPool: return "pool";
    case LoopKind::kStream: return "stream";
    case LoopKind::kSynthesis: return "synthesis";
  }
  return "pool";
}

struct Key {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&, const std::filesystem::path&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

#define NETAL_DOUBLE_KEY(NAME, FIELD, LO, HI, OPEN_LO, OPEN_HI)                              \
  Key {                                                                                      \
    NAME,                                                                                    \
        [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {        \
          c.FIELD = in_range(NAME, to_double(NAME, v), LO, HI, OPEN_LO, OPEN_HI);            \
        },                                                                                   \
        [](const ExperimentConfig& c) { return fmt_double(c.FIELD); }                        \
  }

#define NETAL_POSITIVE_KEY(NAME, FIELD)                                               \
  Key {                                                                               \
    NAME,                                                                             \
        [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) { \
          c.FIELD = to_positive(NAME, v);                                             \
        },                                                                            \
        [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }             \
  }

#define NETAL_BOOL_KEY(NAME, FIELD)                                                   \
  Key {                                                                               \
    NAME,                                                                             \
        [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) { \
          c.FIELD = to_bool(NAME, v);                                                 \
        },                                                                            \
        [](const ExperimentConfig& c) { return std::string(c.FIELD ? "true" : "false"); } \
  }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  std::filesystem::path p(v);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"data_source",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         if (v == "synthetic") {
           c.data_source = DataSource::kSynthetic;
         } else if (v == "csv") {
           c.data_source = DataSource::kCsv;
         } else {
           throw ConfigError("data_source: expected synthetic or csv, got '" + v + "'");
         }
       },
       [](const ExperimentConfig& c) {
         return std::string(c.data_source == DataSource::kCsv ? "csv" : "synthetic");
       }},
      {"csv_path",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path& base) {
         c.csv_path = v.empty() ? std::filesystem::path{} : resolve(base, v);
         if (!c.csv_path.empty() && !std::filesystem::exists(c.csv_path)) {
           throw ConfigError("csv_path: file '" + c.csv_path.string() + "' does not exist");
         }
       },
       [](const ExperimentConfig& c) { return c.csv_path.string(); }},
      {"target_column",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         if (v.empty()) throw ConfigError("target_column: must not be empty");
         c.target_column = v;
       },
       [](const ExperimentConfig& c) { return c.target_column; }},
      {"feature_columns",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         c.feature_columns = (v == "auto") ? std::vector<std::string>{} : split_list(v);
       },
       [](const ExperimentConfig& c) {
         return c.feature_columns.empty() ? std::string("auto")
                                          : join(c.feature_columns, [](const auto& s) { return s; });
       }},
      {"category_map",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path& base) {
         c.category_map = v.empty() ? std::filesystem::path{} : resolve(base, v);
         if (!c.category_map.empty() && !std::filesystem::exists(c.category_map)) {
           throw ConfigError("category_map: file '" + c.category_map.string() + "' does not exist");
         }
       },
       [](const ExperimentConfig& c) { return c.category_map.string(); }},
      NETAL_POSITIVE_KEY("synthetic_samples", synthetic_samples),
      {"synthetic_seed",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         c.synthetic_seed = to_uint("synthetic_seed", v);
       },
       [](const ExperimentConfig& c) { return std::to_string(c.synthetic_seed); }},
      NETAL_DOUBLE_KEY("world_peak_rate", world.peak_rate, 0.0, kInf, true, true),
      NETAL_DOUBLE_KEY("world_range_scale", world.range_scale, 0.0, kInf, true, true),
      NETAL_DOUBLE_KEY("world_noise_std", world.noise_std, 0.0, kInf, false, true),
      NETAL_DOUBLE_KEY("world_driving_factor", world.driving_factor, 0.0, 1.0, false, false),
      {"world_blockage_attenuation",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         const double a = in_range("world_blockage_attenuation",
                                   to_double("world_blockage_attenuation", v), 0.0, 1.0, false, false);
         for (auto& z : c.world.blockages) z.attenuation = a;
       },
       [](const ExperimentConfig& c) {
         return fmt_double(c.world.blockages.empty() ? 1.0 : c.world.blockages.front().attenuation);
       }},
      NETAL_DOUBLE_KEY("test_fraction", test_fraction, 0.0, 1.0, true, true),
      NETAL_DOUBLE_KEY("seed_labeled_fraction", seed_labeled_fraction, 0.0, 1.0, true, true),
      {"loop",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         if (v == "pool") {
           c.loop = LoopKind::kPool;
         } else if (v == "stream") {
           c.loop = LoopKind::kStream;
         } else if (v == "synthesis") {
           c.loop = LoopKind::kSynthesis;
         } else {
           throw ConfigError("loop: expected pool, stream or synthesis, got '" + v + "'");
         }
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.loop)); }},
      {"strategies",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         c.strategies.clear();
         for (const auto& s : split_list(v)) {
           const Strategy parsed = parse_strategy(s);
           if (std::find(c.strategies.begin(), c.strategies.end(), parsed) != c.strategies.end()) {
             throw ConfigError("strategies: '" + s + "' listed twice");
           }
           c.strategies.push_back(parsed);
         }
         if (c.strategies.empty()) throw ConfigError("strategies: at least one strategy required");
       },
       [](const ExperimentConfig& c) {
         return join(c.strategies, [](Strategy s) { return std::string(to_string(s)); });
       }},
      NETAL_POSITIVE_KEY("batch_size", loop_config.batch_size),
      {"iterations",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         c.loop_config.iterations = to_uint("iterations", v);
       },
       [](const ExperimentConfig& c) { return std::to_string(c.loop_config.iterations); }},
      NETAL_DOUBLE_KEY("budget_total", loop_config.budget_total, 0.0, kInf, false, true),
      NETAL_DOUBLE_KEY("annotation_cost", loop_config.annotation_cost, 0.0, kInf, true, true),
      NETAL_DOUBLE_KEY("collection_cost", loop_config.collection_cost, 0.0, kInf, true, true),
      NETAL_BOOL_KEY("collect_enabled", loop_config.collect.enabled),
      NETAL_DOUBLE_KEY("collect_fraction", loop_config.collect.collect_fraction, 0.0, 1.0, false, false),
      {"hidden_layers",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         c.hidden_layers.clear();
         for (const auto& s : split_list(v)) c.hidden_layers.push_back(to_positive("hidden_layers", s));
       },
       [](const ExperimentConfig& c) {
         return join(c.hidden_layers, [](std::size_t n) { return std::to_string(n); });
       }},
      NETAL_DOUBLE_KEY("dropout_rate", loop_config.network.dropout_rate, 0.0, 1.0, false, true),
      {"activation",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         if (v == "relu") {
           c.loop_config.network.activation = Activation::kRelu;
         } else if (v == "tanh") {
           c.loop_config.network.activation = Activation::kTanh;
         } else {
           throw ConfigError("activation: expected relu or tanh, got '" + v + "'");
         }
       },
       [](const ExperimentConfig& c) {
         return std::string(c.loop_config.network.activation == Activation::kTanh ? "tanh" : "relu");
       }},
      NETAL_DOUBLE_KEY("weight_init_scale", loop_config.network.weight_init_scale, 0.0, kInf, true, true),
      NETAL_DOUBLE_KEY("learning_rate", loop_config.adam.lr, 0.0, 1.0, true, false),
      NETAL_POSITIVE_KEY("train_batch_size", loop_config.train_batch_size),
      {"initial_epochs",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         c.loop_config.initial_epochs = to_uint("initial_epochs", v);
       },
       [](const ExperimentConfig& c) { return std::to_string(c.loop_config.initial_epochs); }},
      {"finetune_epochs",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         c.loop_config.finetune_epochs = to_uint("finetune_epochs", v);
       },
       [](const ExperimentConfig& c) { return std::to_string(c.loop_config.finetune_epochs); }},
      NETAL_BOOL_KEY("warm_start", loop_config.warm_start),
      NETAL_BOOL_KEY("persist_optimizer", loop_config.persist_optimizer),
      NETAL_POSITIVE_KEY("mc_passes", loop_config.mc_passes),
      {"committee_size",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         c.loop_config.committee_size = to_uint("committee_size", v);
         if (c.loop_config.committee_size < 2) throw ConfigError("committee_size: must be at least 2");
       },
       [](const ExperimentConfig& c) { return std::to_string(c.loop_config.committee_size); }},
      NETAL_DOUBLE_KEY("hybrid_beta", loop_config.hybrid_beta, 0.0, 1.0, false, false),
      NETAL_DOUBLE_KEY("validation_fraction", loop_config.validation_fraction, 0.0, 1.0, false, true),
      NETAL_POSITIVE_KEY("stream_length", stream_length),
      NETAL_DOUBLE_KEY("stream_quantile", stream.quantile, 0.0, 1.0, true, true),
      NETAL_POSITIVE_KEY("stream_window", stream.window),
      NETAL_POSITIVE_KEY("stream_max_queries", stream.max_queries),
      NETAL_POSITIVE_KEY("stream_refit_every", stream.refit_every),
      NETAL_POSITIVE_KEY("gmm_components", synthesis.gmm_components),
      {"gmm_em_iters",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         c.synthesis.em_iters = to_uint("gmm_em_iters", v);
       },
       [](const ExperimentConfig& c) { return std::to_string(c.synthesis.em_iters); }},
      NETAL_POSITIVE_KEY("synthesis_candidates", synthesis.candidates),
      NETAL_POSITIVE_KEY("probe_points", probe_points),
      {"seeds",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         c.seeds.clear();
         for (const auto& s : split_list(v)) c.seeds.push_back(to_uint("seeds", s));
         if (c.seeds.empty()) throw ConfigError("seeds: at least one seed required");
       },
       [](const ExperimentConfig& c) {
         return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); });
       }},
      {"output_dir",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         if (v.empty()) throw ConfigError("output_dir: must not be empty");
         c.output_dir = v;
       },
       [](const ExperimentConfig& c) { return c.output_dir.string(); }},
      {"reference_initial_rmse",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         if (v.empty()) {
           c.reference_initial_rmse.reset();
         } else {
           c.reference_initial_rmse = in_range("reference_initial_rmse",
                                               to_double("reference_initial_rmse", v), 0.0, kInf,
                                               false, true);
         }
       },
       [](const ExperimentConfig& c) {
         return c.reference_initial_rmse ? fmt_double(*c.reference_initial_rmse) : std::string{};
       }},
      {"reference_final_rmse",
       [](ExperimentConfig& c, const std::string& v, const std::filesystem::path&) {
         c.reference_final_rmse.clear();
         for (const auto& item : split_list(v)) {
           const auto colon = item.find(':');
           if (colon == std::string::npos) {
             throw ConfigError("reference_final_rmse: expected strategy:value pairs");
           }
           const std::string name = trim(item.substr(0, colon));
           parse_strategy(name);
           c.reference_final_rmse[name] =
               to_double("reference_final_rmse", trim(item.substr(colon + 1)));
         }
       },
       [](const ExperimentConfig& c) {
         std::string out;
         for (const auto& [k, v] : c.reference_final_rmse) {
           out += (out.empty() ? "" : ",") + k + ":" + fmt_double(v);
         }
         return out;
       }},
  };
  return table;
}

#undef NETAL_DOUBLE_KEY
#undef NETAL_POSITIVE_KEY
#undef NETAL_BOOL_KEY

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin,
                                   const std::filesystem::path& base_dir) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = keys();
    auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return key == k.name; });
    if (it == table.end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      it->set(config, value, base_dir);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  try {
    validate_config(config);
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return config;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string(), path.parent_path());
}

void validate_config(const ExperimentConfig& c) {
  if (c.data_source == DataSource::kCsv) {
    if (c.csv_path.empty()) throw ConfigError("data_source = csv requires csv_path");
    if (!std::filesystem::exists(c.csv_path)) {
      throw ConfigError("csv_path: file '" + c.csv_path.string() + "' does not exist");
    }
  }
  if (c.loop_config.batch_size == 0) throw ConfigError("batch_size: must be at least 1");
  if (c.strategies.empty()) throw ConfigError("strategies: at least one strategy required");
  if (c.seeds.empty()) throw ConfigError("seeds: at least one seed required");
  if (c.hidden_layers.empty()) throw ConfigError("hidden_layers: at least one hidden layer required");
  if (c.synthetic_samples < 10) throw ConfigError("synthetic_samples: need at least 10");
}

std::string render_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& k : keys()) out += std::string(k.name) + " = " + k.get(config) + "\n";
  return out;
}

std::vector<Sample> load_experiment_samples(const ExperimentConfig& config,
                                            std::vector<std::string>* feature_names) {
  if (config.data_source == DataSource::kSynthetic) {
    if (feature_names) {
      feature_names->assign(synth_schema::kFeatureNames.begin(), synth_schema::kFeatureNames.end());
    }
    return generate_synthetic_dataset(config.world, config.synthetic_samples, config.synthetic_seed);
  }
  CsvOptions opts;
  opts.target_column = config.target_column;
  opts.feature_columns = config.feature_columns;
  if (!config.category_map.empty()) opts.categories = load_category_map(config.category_map);
  auto data = load_csv(config.csv_path, opts);
  if (data.dropped_rows > 0) {
    std::cerr << "[netal] dropped " << data.dropped_rows << " rows with missing values\n";
  }
  if (feature_names) *feature_names = data.feature_names;
  return std::move(data.samples);
}

namespace {

constexpr std::uint64_t kSplitPurpose = 101;
constexpr std::uint64_t kStreamOrderPurpose = 102;
constexpr std::uint64_t kOraclePurpose = 103;
constexpr std::uint64_t kProbeSeed = 20260101;

// Value as it appears in a curve file.
double as_written(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::strtod(buf, nullptr);
}

std::string run_name(Strategy s, std::uint64_t seed) {
  return std::string(to_string(s)) + "_seed" + std::to_string(seed);
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

std::string queries_csv(const LoopResult& r, const DataPool& pool,
                        const std::vector<std::string>& names) {
  std::string out = "iteration,id";
  for (const auto& n : names) out += "," + n;
  out += "\n";
  char buf[64];
  auto emit = [&](std::size_t it, SampleId id) {
    out += std::to_string(it) + "," + std::to_string(id);
    for (double v : pool.sample(id).features) {
      std::snprintf(buf, sizeof buf, ",%.10g", v);
      out += buf;
    }
    out += "\n";
  };
  for (SampleId id : r.seed_ids) emit(0, id);
  for (std::size_t it = 1; it < r.queried.size(); ++it) {
    for (SampleId id : r.queried[it]) emit(it, id);
  }
  return out;
}

std::string stream_csv(const LoopResult& r) {
  std::string out = "arrival,id,score,threshold,queried\n";
  char buf[160];
  for (const auto& d : r.stream_log) {
    std::snprintf(buf, sizeof buf, "%zu,%llu,%.6g,%.6g,%d\n", d.arrival,
                  static_cast<unsigned long long>(d.id), d.score, d.threshold, d.queried ? 1 : 0);
    out += buf;
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string summary_csv(const ExperimentConfig& config, const std::vector<RunRecord>& runs) {
  std::string out = "section,strategy,seed,metric,value\n";
  char buf[256];
  auto row = [&](const char* section, std::string_view strategy, const std::string& seed,
                 const char* metric, double value) {
    std::snprintf(buf, sizeof buf, "%s,%.*s,%s,%s,%.17g\n", section,
                  static_cast<int>(strategy.size()), strategy.data(), seed.c_str(), metric, value);
    out += buf;
  };
  std::map<std::uint64_t, double> random_final;
  for (const auto& r : runs) {
    if (r.strategy == Strategy::kRandom) {
      random_final[r.seed] = as_written(r.result.curve.rows.back().test_rmse);
    }
  }
  for (Strategy s : config.strategies) {
    std::vector<double> initial, final_rmse, reduction;
    for (const auto& r : runs) {
      if (r.strategy != s) continue;
      const double a = as_written(r.result.curve.rows.front().test_rmse);
      const double b = as_written(r.result.curve.rows.back().test_rmse);
      initial.push_back(a);
      final_rmse.push_back(b);
      reduction.push_back(a - b);
    }
    const auto name = to_string(s);
    row("strategy", name, "", "runs", static_cast<double>(final_rmse.size()));
    row("strategy", name, "", "initial_rmse_mean", mean_of(initial));
    row("strategy", name, "", "final_rmse_mean", mean_of(final_rmse));
    row("strategy", name, "", "final_rmse_std", sample_std(final_rmse));
    row("strategy", name, "", "rmse_reduction_mean", mean_of(reduction));
    if (auto it = config.reference_final_rmse.find(std::string(name));
        it != config.reference_final_rmse.end()) {
      row("reference", name, "", "final_rmse", it->second);
    }
  }
  if (config.reference_initial_rmse) {
    row("reference", "", "", "initial_rmse", *config.reference_initial_rmse);
  }
  if (!random_final.empty()) {
    for (Strategy s : config.strategies) {
      if (s == Strategy::kRandom) continue;
      std::size_t wins = 0;
      for (const auto& r : runs) {
        if (r.strategy != s || !random_final.contains(r.seed)) continue;
        const double diff = as_written(r.result.curve.rows.back().test_rmse) - random_final[r.seed];
        if (diff < 0.0) ++wins;
        row("paired", to_string(s), std::to_string(r.seed), "final_rmse_minus_random", diff);
      }
      row("paired", to_string(s), "", "seeds_better_than_random", static_cast<double>(wins));
    }
  }
  return out;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  std::filesystem::create_directories(config.output_dir);
  write_atomically(config.output_dir / "resolved_config.txt", render_config(config));

  std::vector<std::string> names;
  const std::vector<Sample> samples = load_experiment_samples(config, &names);
  if (samples.empty()) throw DataError("dataset is empty");

  LoopConfig loop = config.loop_config;
  loop.network.layer_sizes.clear();
  loop.network.layer_sizes.push_back(samples.front().features.size());
  loop.network.layer_sizes.insert(loop.network.layer_sizes.end(), config.hidden_layers.begin(),
                                  config.hidden_layers.end());
  loop.network.layer_sizes.push_back(1);

  const bool twin = config.data_source == DataSource::kSynthetic;
  std::optional<FeatureMatrix> probe;
  if (twin && config.loop == LoopKind::kSynthesis) {
    probe = probe_grid(config.world, config.probe_points, kProbeSeed);
  }

  ExperimentReport report;
  for (std::uint64_t seed : config.seeds) {
    const PoolSplit split = split_pool(samples, config.test_fraction, config.seed_labeled_fraction,
                                       derive_seed(seed, 0, kSplitPurpose));
    for (Strategy strategy : config.strategies) {
      DataPool pool = split.pool;
      loop.strategy = strategy;
      std::unique_ptr<Oracle> oracle;
      if (twin) {
        oracle = std::make_unique<TwinOracle>(config.world, split.hidden_labels,
                                              derive_seed(seed, 0, kOraclePurpose));
      } else {
        oracle = std::make_unique<PoolOracle>(split.hidden_labels);
      }

      LoopResult result;
      switch (config.loop) {
        case LoopKind::kPool:
          result = run_pool_loop(loop, pool, *oracle, seed);
          break;
        case LoopKind::kStream: {
          std::vector<SampleId> ids(pool.unlabeled().begin(), pool.unlabeled().end());
          const std::size_t n = std::min(config.stream_length, ids.size());
          const auto stream = random_select(ids, n, derive_seed(seed, 0, kStreamOrderPurpose));
          result = run_stream_loop(loop, pool, stream, *oracle, config.stream, seed);
          break;
        }
        case LoopKind::kSynthesis: {
          if (twin) {
            auto& scenario = dynamic_cast<TwinOracle&>(*oracle);
            result = run_synthesis_loop(loop, pool, scenario, config.synthesis,
                                        probe ? &*probe : nullptr, seed);
          } else {
            if (!pool.normalizer()) pool.set_normalizer(fit_normalizer(pool));
            SnapToPoolOracle scenario(*oracle, pool);
            result = run_synthesis_loop(loop, pool, scenario, config.synthesis, nullptr, seed);
          }
          break;
        }
      }

      const std::string name = run_name(strategy, seed);
      RunRecord rec{strategy, seed, config.output_dir / ("curve_" + name + ".csv"), std::move(result),
                    std::move(pool)};
      rec.result.curve.write_csv(rec.curve_file);
      write_atomically(config.output_dir / ("queries_" + name + ".csv"),
                       queries_csv(rec.result, rec.pool, names));
      if (config.loop == LoopKind::kStream) {
        write_atomically(config.output_dir / ("stream_" + name + ".csv"), stream_csv(rec.result));
      }
      report.runs.push_back(std::move(rec));
    }
  }
  report.summary_file = config.output_dir / "summary.csv";
  write_atomically(report.summary_file, summary_csv(config, report.runs));
  return report;
}

std::vector<std::filesystem::path> export_query_geography(const std::filesystem::path& run_dir,
                                                          std::size_t lon_feature,
                                                          std::size_t lat_feature) {
  if (!std::filesystem::is_directory(run_dir)) {
    throw DataError("run directory '" + run_dir.string() + "' does not exist");
  }
  std::vector<std::filesystem::path> inputs;
  for (const auto& entry : std::filesystem::directory_iterator(run_dir)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with("queries_") && entry.path().extension() == ".csv") {
      inputs.push_back(entry.path());
    }
  }
  if (inputs.empty()) throw DataError("no queries_*.csv files in '" + run_dir.string() + "'");
  std::sort(inputs.begin(), inputs.end());

  std::vector<std::filesystem::path> written;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    const std::size_t columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (columns < 3) throw DataError("'" + path.string() + "' has no feature columns");
    const std::size_t features = columns - 2;
    if (lon_feature >= features || lat_feature >= features) {
      throw DataError("feature index out of range: '" + path.string() + "' has " +
                      std::to_string(features) + " features");
    }
    struct Row {
      std::size_t iteration;
      std::string id, lon, lat;
    };
    std::vector<Row> rows;
    std::size_t last = 0;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      const auto cells = split_list(line);
      if (cells.size() != columns) throw DataError("malformed row in '" + path.string() + "'");
      Row r{to_uint("iteration", cells[0]), cells[1], cells[2 + lon_feature], cells[2 + lat_feature]};
      last = std::max(last, r.iteration);
      rows.push_back(std::move(r));
    }
    std::string out = "iteration,id,lon,lat,status\n";
    for (std::size_t it = 0; it <= last; ++it) {
      for (const auto& r : rows) {
        const bool earlier = it == 0 ? r.iteration == 0 : r.iteration < it;
        const bool fresh = it > 0 && r.iteration == it;
        if (!earlier && !fresh) continue;
        out += std::to_string(it) + "," + r.id + "," + r.lon + "," + r.lat + "," +
               (fresh ? "new_query" : "previously_labeled") + "\n";
      }
    }
    auto target = path.parent_path() / ("geo_" + path.filename().string().substr(8));
    write_atomically(target, out);
    written.push_back(target);
  }
  return written;
}

}  // namespace netal
