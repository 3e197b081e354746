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

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "netal/dataset.hpp"
#include "netal/neural.hpp"

namespace netal {

// Column layout of synthetic samples. Positions are local east/north meters
// on a rectangular 400 m x 250 m loop (perimeter 1300 m); the compass is in
// degrees clockwise from north.
namespace synth_schema {
inline constexpr std::size_t kPosX = 0;
inline constexpr std::size_t kPosY = 1;
inline constexpr std::size_t kSpeed = 2;        // m/s
inline constexpr std::size_t kMode = 3;         // 0 walking, 1 driving
inline constexpr std::size_t kCompass = 4;      // degrees
inline constexpr std::size_t kTrajectory = 5;   // 0 clockwise, 1 anticlockwise
inline constexpr std::size_t kFeatureCount = 19;

extern const std::array<const char*, kFeatureCount> kFeatureNames;
inline constexpr const char* kTargetName = "throughput_mbps";
}  // namespace synth_schema

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct BlockageZone {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
  double attenuation = 0.25;

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

// Analytic stand-in for a digital twin: a deterministic throughput field plus
// Gaussian measurement noise.
struct TwinWorld {
  std::vector<Point2> base_stations;
  std::vector<BlockageZone> blockages;
  double walking_factor = 1.0;
  double driving_factor = 0.8;
  double peak_rate = 2000.0;   // Mbps
  double range_scale = 300.0;  // m
  double noise_std = 50.0;     // Mbps
  // Throughput loss when facing directly away from the serving station.
  double orientation_depth = 0.05;
  double blockage_loss_db = 4.0;  // drop in NR RSRP/SINR inside a blockage zone

  double loop_width = 400.0;
  double loop_height = 250.0;
  double position_jitter = 4.0;  // m
  double driving_probability = 0.4;
  double stationary_probability = 0.08;

  static TwinWorld standard();

  double perimeter() const { return 2.0 * (loop_width + loop_height); }
  // Point on the loop at arc length s (counter-clockwise from the origin corner).
  Point2 loop_point(double s) const;
  // Arc length of the loop point nearest to (x, y).
  double loop_coordinate(double x, double y) const;
  double mode_factor(double mode_code) const;  // throws DataError for unknown codes
  // Deterministic part of the throughput (no noise, before clamping).
  double mean_rate(std::span<const double> features) const;
};

// Throughput in Mbps; noise drawn from a generator seeded with noise_seed.
// Clamped at 0.
double twin_label(const TwinWorld& world, std::span<const double> features,
                  std::uint64_t noise_seed);

// Builds a full feature vector for a scenario given its controllable part
// (position, speed, mode, compass, trajectory); derived signal features are
// computed from position with measurement noise from `rng`.
std::vector<double> scenario_features(const TwinWorld& world, double x, double y, double speed,
                                      double mode, double compass, double trajectory, Rng& rng);

// Projects an arbitrary (e.g. density-model) feature vector onto a physically
// valid scenario: categorical codes snapped, speed clamped, compass wrapped,
// derived features recomputed.
std::vector<double> realize_scenario(const TwinWorld& world, std::span<const double> features,
                                     std::uint64_t rng_seed);

// n labeled samples (origin ingested, sequential ids) drawn along the loop.
std::vector<Sample> generate_synthetic_dataset(const TwinWorld& world, std::size_t n,
                                               std::uint64_t rng_seed);

// n scenarios evenly spaced along the loop (alternating walking/driving,
// anticlockwise heading), one per column; fixed for a given seed.
FeatureMatrix probe_grid(const TwinWorld& world, std::size_t n, std::uint64_t rng_seed);

// Writes the synthetic schema as CSV with textual mode/trajectory columns;
// readable by load_csv with synthetic_category_map().
void write_synthetic_csv(const std::filesystem::path& path, std::span<const Sample> samples);
std::map<std::string, double> synthetic_category_map();

}  // namespace netal
