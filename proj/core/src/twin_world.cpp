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

#include "netal/twin_world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

namespace netal {

namespace synth_schema {
const std::array<const char*, kFeatureCount> kFeatureNames = {
    "pos_x_m",     "pos_y_m",    "speed_mps",   "mobility_mode", "compass_deg",
    "trajectory_direction",      "dist_bs0_m",  "dist_bs1_m",    "dist_bs2_m",
    "nr_ss_rsrp",  "nr_ss_sinr", "nr_ss_rsrq",  "lte_rsrp",      "lte_rsrq",
    "lte_rssnr",   "lte_rssi",   "loop_sin",    "loop_cos",      "serving_tower"};
}  // namespace synth_schema

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  return w;
}

// Compass bearing (clockwise from north) of the vector (dx, dy).
double bearing(double dx, double dy) { return wrap_degrees(std::atan2(dx, dy) * kDegPerRad); }

std::size_t nearest_station(const TwinWorld& w, double x, double y, double* distance) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.base_stations.size(); ++i) {
    const double d = std::hypot(x - w.base_stations[i].x, y - w.base_stations[i].y);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  if (distance) *distance = best_d;
  return best;
}

}  // namespace

TwinWorld TwinWorld::standard() {
  TwinWorld w;
  w.base_stations = {{120.0, -20.0}, {420.0, 180.0}, {60.0, 280.0}};
  w.blockages = {{230.0, 285.0, 225.0, 275.0, 0.25}, {375.0, 425.0, 55.0, 100.0, 0.25}};
  return w;
}

Point2 TwinWorld::loop_point(double s) const {
  s = std::fmod(s, perimeter());
  if (s < 0.0) s += perimeter();
  if (s < loop_width) return {s, 0.0};
  s -= loop_width;
  if (s < loop_height) return {loop_width, s};
  s -= loop_height;
  if (s < loop_width) return {loop_width - s, loop_height};
  s -= loop_width;
  return {0.0, loop_height - s};
}

double TwinWorld::loop_coordinate(double x, double y) const {
  const double cx = std::clamp(x, 0.0, loop_width);
  const double cy = std::clamp(y, 0.0, loop_height);
  struct Candidate {
    double dist;
    double s;
  };
  const std::array<Candidate, 4> edges = {{
      {std::hypot(x - cx, y - 0.0), cx},
      {std::hypot(x - loop_width, y - cy), loop_width + cy},
      {std::hypot(x - cx, y - loop_height), loop_width + loop_height + (loop_width - cx)},
      {std::hypot(x - 0.0, y - cy), 2.0 * loop_width + loop_height + (loop_height - cy)},
  }};
  const auto best = std::min_element(edges.begin(), edges.end(),
                                     [](const auto& a, const auto& b) { return a.dist < b.dist; });
  return std::fmod(best->s, perimeter());
}

double TwinWorld::mode_factor(double mode_code) const {
  if (mode_code == 0.0) return walking_factor;
  if (mode_code == 1.0) return driving_factor;
  throw DataError("unknown mobility mode code " + std::to_string(mode_code));
}

double TwinWorld::mean_rate(std::span<const double> f) const {
  if (f.size() <= synth_schema::kTrajectory) {
    throw DataError("twin world needs the synthetic feature schema");
  }
  const double x = f[synth_schema::kPosX];
  const double y = f[synth_schema::kPosY];
  double d = 0.0;
  const std::size_t bs = nearest_station(*this, x, y, &d);
  double orientation = 1.0;
  if (d > 0.0) {
    const double to_bs = bearing(base_stations[bs].x - x, base_stations[bs].y - y);
    const double delta = (f[synth_schema::kCompass] - to_bs) / kDegPerRad;
    orientation = 1.0 - orientation_depth * (1.0 - std::cos(delta)) / 2.0;
  }
  double attenuation = 1.0;
  for (const auto& z : blockages) {
    if (z.contains(x, y)) attenuation *= z.attenuation;
  }
  return peak_rate * std::exp(-d / range_scale) * mode_factor(f[synth_schema::kMode]) *
         attenuation * orientation;
}

double twin_label(const TwinWorld& world, std::span<const double> features,
                  std::uint64_t noise_seed) {
  double rate = world.mean_rate(features);
  if (world.noise_std > 0.0) {
    Rng rng(noise_seed);
    rate += std::normal_distribution<double>(0.0, world.noise_std)(rng);
  }
  return std::max(rate, 0.0);
}

std::vector<double> scenario_features(const TwinWorld& world, double x, double y, double speed,
                                      double mode, double compass, double trajectory, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> f(synth_schema::kFeatureCount, 0.0);
  f[synth_schema::kPosX] = x;
  f[synth_schema::kPosY] = y;
  f[synth_schema::kSpeed] = speed;
  f[synth_schema::kMode] = mode;
  f[synth_schema::kCompass] = compass;
  f[synth_schema::kTrajectory] = trajectory;

  for (std::size_t i = 0; i < 3 && i < world.base_stations.size(); ++i) {
    const double d = std::hypot(x - world.base_stations[i].x, y - world.base_stations[i].y);
    f[6 + i] = d + 3.0 * n01(rng);
  }
  double d_near = 0.0;
  const std::size_t serving = nearest_station(world, x, y, &d_near);
  bool blocked = false;
  for (const auto& z : world.blockages) blocked = blocked || z.contains(x, y);
  const double d_macro = std::hypot(x - world.loop_width / 2.0, y - world.loop_height / 2.0);

  // Blockage hits the mmWave link only; the LTE anchor is unaffected.
  const double loss = blocked ? world.blockage_loss_db : 0.0;
  f[9] = -70.0 - 25.0 * std::log10(1.0 + d_near / 20.0) - loss + 2.0 * n01(rng);
  f[10] = 28.0 - 0.1 * d_near - loss + 2.0 * n01(rng);
  f[11] = -10.0 - d_near / 80.0 - loss / 5.0 + 1.0 * n01(rng);
  f[12] = -85.0 - d_macro / 40.0 + 2.0 * n01(rng);
  f[13] = -9.0 - d_macro / 150.0 + 1.0 * n01(rng);
  f[14] = 15.0 - d_macro / 30.0 + 2.0 * n01(rng);
  f[15] = -60.0 - d_macro / 50.0 + 2.0 * n01(rng);
  const double phase = 2.0 * std::numbers::pi * world.loop_coordinate(x, y) / world.perimeter();
  f[16] = std::sin(phase);
  f[17] = std::cos(phase);
  f[18] = static_cast<double>(serving);
  return f;
}

std::vector<double> realize_scenario(const TwinWorld& world, std::span<const double> features,
                                     std::uint64_t rng_seed) {
  if (features.size() != synth_schema::kFeatureCount) {
    throw DataError("realize_scenario: expected the synthetic feature schema");
  }
  Rng rng(rng_seed);
  const double mode = features[synth_schema::kMode] >= 0.5 ? 1.0 : 0.0;
  const double trajectory = features[synth_schema::kTrajectory] >= 0.5 ? 1.0 : 0.0;
  return scenario_features(world, features[synth_schema::kPosX], features[synth_schema::kPosY],
                           std::max(0.0, features[synth_schema::kSpeed]), mode,
                           wrap_degrees(features[synth_schema::kCompass]), trajectory, rng);
}

std::vector<Sample> generate_synthetic_dataset(const TwinWorld& world, std::size_t n,
                                               std::uint64_t rng_seed) {
  if (n == 0) throw DataError("generate_synthetic_dataset: n must be at least 1");
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(rng_seed, i, 1));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);

    const double s = unit(rng) * world.perimeter();
    const Point2 p = world.loop_point(s);
    const double x = p.x + world.position_jitter * n01(rng);
    const double y = p.y + world.position_jitter * n01(rng);
    const double trajectory = unit(rng) < 0.5 ? 0.0 : 1.0;
    const double mode = unit(rng) < world.driving_probability ? 1.0 : 0.0;
    const bool stationary = unit(rng) < world.stationary_probability;

    double speed = 0.0;
    if (!stationary) speed = mode == 1.0 ? 2.0 + 13.0 * unit(rng) : 0.5 + 1.5 * unit(rng);

    // Anticlockwise travel heading along each edge of the loop.
    const double edge_s = std::fmod(s, world.perimeter());
    double heading = 0.0;
    if (edge_s < world.loop_width) {
      heading = 90.0;
    } else if (edge_s < world.loop_width + world.loop_height) {
      heading = 0.0;
    } else if (edge_s < 2.0 * world.loop_width + world.loop_height) {
      heading = 270.0;
    } else {
      heading = 180.0;
    }
    if (trajectory == 0.0) heading += 180.0;
    const double compass =
        stationary ? 360.0 * unit(rng) : wrap_degrees(heading + 10.0 * n01(rng));

    Sample sample;
    sample.id = i;
    sample.features = scenario_features(world, x, y, speed, mode, compass, trajectory, rng);
    sample.label = twin_label(world, sample.features, derive_seed(rng_seed, i, 2));
    out.push_back(std::move(sample));
  }
  return out;
}

FeatureMatrix probe_grid(const TwinWorld& world, std::size_t n, std::uint64_t rng_seed) {
  FeatureMatrix out(static_cast<Eigen::Index>(synth_schema::kFeatureCount),
                    static_cast<Eigen::Index>(n));
  Rng rng(rng_seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = world.perimeter() * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const Point2 p = world.loop_point(s);
    const bool driving = i % 2 == 1;
    double heading = 180.0;
    if (s < world.loop_width) {
      heading = 90.0;
    } else if (s < world.loop_width + world.loop_height) {
      heading = 0.0;
    } else if (s < 2.0 * world.loop_width + world.loop_height) {
      heading = 270.0;
    }
    const auto f = scenario_features(world, p.x, p.y, driving ? 8.0 : 1.2, driving ? 1.0 : 0.0,
                                     heading, 1.0, rng);
    out.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  }
  return out;
}

void write_synthetic_csv(const std::filesystem::path& path, std::span<const Sample> samples) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const char* name : synth_schema::kFeatureNames) out << name << ',';
  out << synth_schema::kTargetName << '\n';
  char buf[64];
  for (const auto& s : samples) {
    if (s.features.size() != synth_schema::kFeatureCount) {
      throw DataError("write_synthetic_csv: sample does not follow the synthetic schema");
    }
    for (std::size_t j = 0; j < s.features.size(); ++j) {
      if (j == synth_schema::kMode) {
        out << (s.features[j] == 1.0 ? "driving" : "walking");
      } else if (j == synth_schema::kTrajectory) {
        out << (s.features[j] == 1.0 ? "ACW" : "CW");
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", s.features[j]);
        out << buf;
      }
      out << ',';
    }
    if (s.label) {
      std::snprintf(buf, sizeof buf, "%.17g", *s.label);
      out << buf;
    }
    out << '\n';
  }
}

std::map<std::string, double> synthetic_category_map() {
  return {{"walking", 0.0}, {"driving", 1.0}, {"CW", 0.0}, {"ACW", 1.0}};
}

}  // namespace netal
