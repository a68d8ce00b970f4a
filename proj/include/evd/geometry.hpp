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

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "evd/core.hpp"

namespace evd {

/// Event mapped into the unit cube: x / (width-1), y / (height-1) and the
/// timestamp affinely from [t_min, t_max]. Degenerate axes map to 0.5.
struct NormalizedPoint {
  double nx = 0.0;
  double ny = 0.0;
  double nt = 0.0;
  std::int8_t p = 1;
};

struct LevelSpec {
  std::size_t T = 1;    // centroids
  std::size_t K = 1;    // group size
  double r = 0.1;       // grouping radius, normalised units
  std::size_t D = 8;    // output channels

  void check() const;  // throws ConfigError
  friend bool operator==(const LevelSpec&, const LevelSpec&) = default;
};

struct TimeSpan {
  std::uint64_t t_min = 0;
  std::uint64_t t_max = 0;
};

TimeSpan time_span(std::span<const Event> events);

std::vector<NormalizedPoint> normalize_coords(std::span<const Event> events,
                                              const SensorGeometry& geometry, TimeSpan span);
inline std::vector<NormalizedPoint> normalize_coords(std::span<const Event> events,
                                                     const SensorGeometry& geometry) {
  return normalize_coords(events, geometry, time_span(events));
}

/// Inverse of normalize_coords (nearest integer pixel and microsecond).
Event denormalize(const NormalizedPoint& point, const SensorGeometry& geometry, TimeSpan span);

inline double squared_distance(const NormalizedPoint& a, const NormalizedPoint& b) {
  const double dx = a.nx - b.nx;
  const double dy = a.ny - b.ny;
  const double dt = a.nt - b.nt;
  return dx * dx + dy * dy + dt * dt;
}

/// Farthest-point sampling over the eligible points. The first pick is the
/// lowest eligible index; ties go to the lower index. When fewer than T points
/// are eligible the chosen set is repeated cyclically up to T entries.
/// Throws NoEligibleEvents when no point is eligible.
std::vector<std::uint32_t> farthest_event_sampling(std::span<const NormalizedPoint> points,
                                                   std::size_t T,
                                                   std::span<const std::uint8_t> eligible);

/// Row-major T x K neighbour indices: the K nearest points within r of each
/// centroid (nearest first, lower index on ties), padded with the centroid.
std::vector<std::uint32_t> ball_group(std::span<const NormalizedPoint> points,
                                      std::span<const std::uint32_t> centroids, double r,
                                      std::size_t K);

/// T x K x 4 grid of (dnx, dny, dnt, p) of each member relative to its centroid.
std::vector<double> relative_transform(std::span<const NormalizedPoint> points,
                                       std::span<const std::uint32_t> group,
                                       std::span<const std::uint32_t> centroids);

/// Three-nearest inverse-square-distance interpolation weights.
struct IdwPlan {
  std::size_t targets = 0;
  std::vector<std::array<std::uint32_t, 3>> source;
  std::vector<std::array<double, 3>> weight;  // unused slots carry weight 0
};

IdwPlan idw_plan(std::span<const NormalizedPoint> targets, std::span<const NormalizedPoint> sources);

/// Interpolates a row-major (sources x D) feature table onto the targets.
template <class Scalar>
std::vector<Scalar> idw_apply(const IdwPlan& plan, std::span<const Scalar> source_features,
                              std::size_t D) {
  std::vector<Scalar> out(plan.targets * D, Scalar(0));
  for (std::size_t i = 0; i < plan.targets; ++i) {
    for (int h = 0; h < 3; ++h) {
      const auto w = static_cast<Scalar>(plan.weight[i][h]);
      if (w == Scalar(0)) continue;
      const Scalar* src = source_features.data() + std::size_t(plan.source[i][h]) * D;
      Scalar* dst = out.data() + i * D;
      for (std::size_t d = 0; d < D; ++d) dst[d] += w * src[d];
    }
  }
  return out;
}

std::vector<double> idw_interpolate(std::span<const NormalizedPoint> targets,
                                    std::span<const NormalizedPoint> sources,
                                    std::span<const double> source_features, std::size_t D);

}  // namespace evd
