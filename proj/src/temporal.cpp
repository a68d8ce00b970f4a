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

#include "evd/temporal.hpp"

#include <algorithm>
#include <cmath>

#include "evd/error.hpp"

namespace evd {
namespace {

// -(t - mu)^2 / (2 sigma^2); every caller goes through here so that equal
// timestamps give bit-identical log probabilities.
double exponent(double t, const TemporalStats& stats) {
  const double d = t - stats.t_mu;
  return -d * d / (2.0 * stats.sigma * stats.sigma);
}

double log_normaliser(const TemporalStats& stats, std::span<const Event> window) {
  double peak = -INFINITY;
  for (const auto& e : window) peak = std::max(peak, exponent(double(e.t), stats));
  double acc = 0.0;
  for (const auto& e : window) acc += std::exp(exponent(double(e.t), stats) - peak);
  return peak + std::log(acc);
}

}  // namespace

TemporalStats temporal_stats(std::span<const Event> events) {
  TemporalStats s;
  s.count_M = events.size();
  if (events.empty()) return s;
  s.t_min = events.front().t;
  s.t_max = events.front().t;
  for (const auto& e : events) {
    s.t_min = std::min(s.t_min, e.t);
    s.t_max = std::max(s.t_max, e.t);
  }
  s.t_mu = std::clamp(mean_timestamp(events), double(s.t_min), double(s.t_max));
  long double var = 0.0L;
  for (const auto& e : events) {
    const long double d = static_cast<long double>(e.t) - s.t_mu;
    var += d * d;
  }
  s.sigma = static_cast<double>(std::sqrt(var / events.size()));
  return s;
}

double temporal_log_probability(double t, const TemporalStats& stats, std::span<const Event> window) {
  if (!(stats.sigma > 0.0)) throw ZeroVariance();
  return exponent(t, stats) - log_normaliser(stats, window);
}

double temporal_probability(double t, const TemporalStats& stats, std::span<const Event> window) {
  return std::exp(temporal_log_probability(t, stats, window));
}

std::vector<double> temporal_log_distribution(std::span<const Event> window, const TemporalStats& stats) {
  if (!(stats.sigma > 0.0)) throw ZeroVariance();
  const double log_z = log_normaliser(stats, window);
  std::vector<double> out(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) out[i] = exponent(double(window[i].t), stats) - log_z;
  return out;
}

std::vector<double> temporal_distribution(std::span<const Event> window) {
  const auto stats = temporal_stats(window);
  std::vector<double> out(window.size(), window.empty() ? 0.0 : 1.0 / double(window.size()));
  if (!(stats.sigma > 0.0)) return out;
  const auto logs = temporal_log_distribution(window, stats);
  for (std::size_t i = 0; i < window.size(); ++i) out[i] = std::exp(logs[i]);
  return out;
}

double adaptive_t_lim(const TemporalStats& stats, const TwConfig& config) {
  if (config.explicit_t_lim) return *config.explicit_t_lim;
  const double span = static_cast<double>(stats.t_max - stats.t_min);
  const std::size_t parts = config.L == 0 ? 0 : stats.count_M / config.L;
  return parts == 0 ? span : span / static_cast<double>(parts);
}

TwSplit tw_filter(const EventWindow& window, double t_lim) {
  TwSplit out;
  out.kept.reserve(window.size());
  out.kept_index.reserve(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    const auto& e = window.events[i];
    if (std::abs(static_cast<double>(e.t) - window.t_mu) <= t_lim) {
      out.kept.push_back(e);
      out.kept_index.push_back(i);
    } else {
      out.dropped.push_back(e);
      out.dropped_index.push_back(i);
    }
  }
  return out;
}

}  // namespace evd
