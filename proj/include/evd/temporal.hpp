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
#include <optional>
#include <span>
#include <vector>

#include "evd/core.hpp"

namespace evd {

struct TemporalStats {
  double t_mu = 0.0;
  double sigma = 0.0;  // population standard deviation, microseconds
  std::uint64_t t_min = 0;
  std::uint64_t t_max = 0;
  std::size_t count_M = 0;
};

struct TwConfig {
  std::size_t L = 500;  // events per transient movement
  std::optional<double> explicit_t_lim;
};

TemporalStats temporal_stats(std::span<const Event> events);

/// Discrete Gaussian weight of timestamp t among the window's timestamps,
/// normalised over every event of the window (duplicates count per event).
/// Throws ZeroVariance when sigma == 0.
double temporal_probability(double t, const TemporalStats& stats, std::span<const Event> window);

/// log of temporal_probability; stays finite where the probability underflows.
double temporal_log_probability(double t, const TemporalStats& stats, std::span<const Event> window);

/// temporal_log_probability for every event of the window in one pass.
/// Throws ZeroVariance when sigma == 0.
std::vector<double> temporal_log_distribution(std::span<const Event> window, const TemporalStats& stats);

/// Probabilities for every event of the window. sigma == 0 yields 1/M each.
std::vector<double> temporal_distribution(std::span<const Event> window);

/// (t_max - t_min) / floor(M / L), or the whole span when floor(M / L) == 0.
double adaptive_t_lim(const TemporalStats& stats, const TwConfig& config);

struct TwSplit {
  std::vector<Event> kept;
  std::vector<Event> dropped;
  std::vector<std::size_t> kept_index;  // positions in the input window
  std::vector<std::size_t> dropped_index;
};

/// Keeps events with |t - t_mu| <= t_lim (closed interval).
TwSplit tw_filter(const EventWindow& window, double t_lim);

}  // namespace evd
