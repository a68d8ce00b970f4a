// Copyright 2026 The evdenoise Authors
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

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evd/core.hpp"

namespace evd {

enum class SceneKind { MovingBar, MovingDisk, TwoObjects };

SceneKind parse_scene_kind(const std::string& name);
std::string to_string(SceneKind kind);

/// A bright object sliding over a uniform background at constant velocity.
/// The object passes through (center_x, center_y) half-way through the scene;
/// NaN centres mean the sensor centre.
struct SceneSpec {
  SceneKind kind = SceneKind::MovingBar;
  double vx = 100.0;  // pixels / second
  double vy = 0.0;
  double object_size = 12.0;  // bar width or disk diameter, pixels
  double contrast = 3.0;      // amplified object / background ratio, >= 1
  std::uint64_t duration_us = 500'000;
  double frame_rate = 2000.0;  // internal sampling rate, Hz
  double center_x = std::numeric_limits<double>::quiet_NaN();
  double center_y = std::numeric_limits<double>::quiet_NaN();
  // Relative per-pixel spread of theta, drawn from the simulation seed.
  double threshold_mismatch = 0.0;

  /// Throws ConfigError for a non-positive duration, contrast < 1, or a frame
  /// rate that lets the object move more than one pixel per step.
  void check() const;
  bool is_static() const { return (vx == 0.0 && vy == 0.0) || contrast == 1.0; }
};

struct NoiseSpec {
  double eta = 0.0;             // events / pixel / second
  std::optional<double> ratio;  // noise count relative to the real-event count
  std::uint64_t seed = 0;
  double dead_time_us = 0.0;  // no noise this soon after a real event at the same pixel

  void check() const;
};

/// Emits an event whenever a pixel's log-amplified intensity drifts by theta
/// from its reference level. Returns an empty stream for a static scene unless
/// `reject_degenerate` is set, in which case DegenerateScene is thrown.
std::vector<Event> simulate_events(const SceneSpec& scene, const SensorGeometry& geometry,
                                   std::uint64_t seed, bool reject_degenerate = false);

/// Intensity seen by pixel (px, py) at time t_us. Exposed for the tests' oracle.
double scene_intensity(const SceneSpec& scene, const SensorGeometry& geometry, int px, int py,
                       double t_us);

/// Adds background-activity noise labelled Noise. Real events keep their
/// relative order; the result is time-sorted.
std::vector<Event> inject_ba_noise(std::span<const Event> stream, const NoiseSpec& spec,
                                   const SensorGeometry& geometry, std::uint64_t duration_us);

/// P{N(t) = n} for a Poisson process with rate eta (per second) over t seconds.
double poisson_count_pmf(std::uint64_t n, double eta, double t_seconds);

/// Deterministic 64-bit generator key for (seed, stream id).
std::uint64_t rng_key(std::uint64_t seed, std::uint64_t stream);

// key=value configuration files shared by the simulator, trainer and CLI.
using KeyValues = std::map<std::string, std::string>;
KeyValues read_key_values(const std::filesystem::path& path);
SceneSpec scene_from_config(const KeyValues& kv, SceneSpec base = {});
NoiseSpec noise_from_config(const KeyValues& kv, NoiseSpec base = {});

}  // namespace evd
