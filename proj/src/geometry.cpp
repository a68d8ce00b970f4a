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

#include "evd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "evd/error.hpp"

namespace evd {

void LevelSpec::check() const {
  if (T < 1 || K < 1) throw ConfigError("level T and K must be >= 1");
  if (!(r > 0.0 && r <= std::sqrt(3.0))) throw ConfigError("level radius must lie in (0, sqrt(3)]");
  if (D < 1) throw ConfigError("level width D must be >= 1");
}

TimeSpan time_span(std::span<const Event> events) {
  TimeSpan s;
  if (events.empty()) return s;
  s.t_min = s.t_max = events.front().t;
  for (const auto& e : events) {
    s.t_min = std::min(s.t_min, e.t);
    s.t_max = std::max(s.t_max, e.t);
  }
  return s;
}

std::vector<NormalizedPoint> normalize_coords(std::span<const Event> events,
                                              const SensorGeometry& geometry, TimeSpan span) {
  const double sx = geometry.width > 1 ? 1.0 / (geometry.width - 1) : 0.0;
  const double sy = geometry.height > 1 ? 1.0 / (geometry.height - 1) : 0.0;
  const double range = static_cast<double>(span.t_max - span.t_min);
  std::vector<NormalizedPoint> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    NormalizedPoint p;
    p.nx = geometry.width > 1 ? e.x * sx : 0.5;
    p.ny = geometry.height > 1 ? e.y * sy : 0.5;
    p.nt = range > 0.0 ? static_cast<double>(e.t - span.t_min) / range : 0.5;
    p.p = e.p;
    out.push_back(p);
  }
  return out;
}

Event denormalize(const NormalizedPoint& point, const SensorGeometry& geometry, TimeSpan span) {
  Event e;
  e.x = geometry.width > 1 ? static_cast<std::uint16_t>(std::lround(point.nx * (geometry.width - 1))) : 0;
  e.y = geometry.height > 1 ? static_cast<std::uint16_t>(std::lround(point.ny * (geometry.height - 1))) : 0;
  const double range = static_cast<double>(span.t_max - span.t_min);
  e.t = span.t_min + (range > 0.0 ? static_cast<std::uint64_t>(std::llround(point.nt * range)) : 0);
  e.p = point.p;
  return e;
}

std::vector<std::uint32_t> farthest_event_sampling(std::span<const NormalizedPoint> points,
                                                   std::size_t T,
                                                   std::span<const std::uint8_t> eligible) {
  const std::size_t n = points.size();
  std::size_t first = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (eligible[i]) {
      first = i;
      break;
    }
  }
  if (first == n || T == 0) throw NoEligibleEvents();

  // Chosen and ineligible points carry a negative sentinel so they never win.
  std::vector<double> min_d(n, -1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (eligible[i]) min_d[i] = INFINITY;
  }
  std::vector<std::uint32_t> chosen;
  chosen.reserve(T);
  std::size_t next = first;
  while (chosen.size() < T) {
    chosen.push_back(static_cast<std::uint32_t>(next));
    min_d[next] = -1.0;
    const auto& c = points[next];
    double best = -1.0;
    std::size_t best_i = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (min_d[i] < 0.0) continue;
      const double d = squared_distance(points[i], c);
      if (d < min_d[i]) min_d[i] = d;
      if (min_d[i] > best) {
        best = min_d[i];
        best_i = i;
      }
    }
    if (best_i == n) break;
    next = best_i;
  }
  for (std::size_t i = 0; chosen.size() < T; ++i) chosen.push_back(chosen[i]);
  return chosen;
}

std::vector<std::uint32_t> ball_group(std::span<const NormalizedPoint> points,
                                      std::span<const std::uint32_t> centroids, double r,
                                      std::size_t K) {
  const double r2 = r * r;
  std::vector<std::uint32_t> out(centroids.size() * K);
  std::vector<std::pair<double, std::uint32_t>> cand;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const auto& centre = points[centroids[c]];
    cand.clear();
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double d = squared_distance(points[i], centre);
      if (d <= r2) cand.emplace_back(d, static_cast<std::uint32_t>(i));
    }
    const std::size_t take = std::min(K, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + take, cand.end());
    auto* row = out.data() + c * K;
    for (std::size_t k = 0; k < K; ++k) row[k] = k < take ? cand[k].second : centroids[c];
  }
  return out;
}

std::vector<double> relative_transform(std::span<const NormalizedPoint> points,
                                       std::span<const std::uint32_t> group,
                                       std::span<const std::uint32_t> centroids) {
  const std::size_t T = centroids.size();
  const std::size_t K = T == 0 ? 0 : group.size() / T;
  std::vector<double> out(group.size() * 4);
  for (std::size_t c = 0; c < T; ++c) {
    const auto& centre = points[centroids[c]];
    for (std::size_t k = 0; k < K; ++k) {
      const auto& m = points[group[c * K + k]];
      double* cell = out.data() + (c * K + k) * 4;
      cell[0] = m.nx - centre.nx;
      cell[1] = m.ny - centre.ny;
      cell[2] = m.nt - centre.nt;
      cell[3] = m.p;
    }
  }
  return out;
}

IdwPlan idw_plan(std::span<const NormalizedPoint> targets, std::span<const NormalizedPoint> sources) {
  IdwPlan plan;
  plan.targets = targets.size();
  plan.source.resize(targets.size());
  plan.weight.resize(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    // Three smallest (distance, index) pairs by insertion.
    std::array<std::pair<double, std::uint32_t>, 3> best;
    best.fill({INFINITY, 0});
    std::size_t found = 0;
    for (std::size_t s = 0; s < sources.size(); ++s) {
      std::pair<double, std::uint32_t> cand{squared_distance(targets[i], sources[s]),
                                            static_cast<std::uint32_t>(s)};
      if (found == 3 && !(cand < best[2])) continue;
      std::size_t pos = std::min<std::size_t>(found, 2);
      best[pos] = cand;
      while (pos > 0 && best[pos] < best[pos - 1]) {
        std::swap(best[pos], best[pos - 1]);
        --pos;
      }
      found = std::min<std::size_t>(found + 1, 3);
    }
    auto& src = plan.source[i];
    auto& w = plan.weight[i];
    src = {0, 0, 0};
    w = {0.0, 0.0, 0.0};
    if (found == 0) continue;
    if (best[0].first == 0.0) {
      src[0] = best[0].second;
      w[0] = 1.0;
      continue;
    }
    double total = 0.0;
    for (std::size_t h = 0; h < found; ++h) {
      src[h] = best[h].second;
      w[h] = 1.0 / best[h].first;
      total += w[h];
    }
    for (std::size_t h = 0; h < found; ++h) w[h] /= total;
  }
  return plan;
}

std::vector<double> idw_interpolate(std::span<const NormalizedPoint> targets,
                                    std::span<const NormalizedPoint> sources,
                                    std::span<const double> source_features, std::size_t D) {
  return idw_apply<double>(idw_plan(targets, sources), source_features, D);
}

}  // namespace evd
