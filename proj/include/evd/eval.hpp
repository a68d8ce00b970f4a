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

#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "evd/core.hpp"

namespace evd {

struct FilterConfig {
  double baf_dt = 2000.0;  // microseconds
  int radius = 1;          // pixels (Chebyshev)
  std::size_t nnb_count = 2;
  double nnb_dt = 5000.0;
  double rp_period = 500.0;

  void check() const;
};

/// Background activity filter: Real iff a neighbour pixel (own pixel excluded)
/// fired within baf_dt before the event.
std::vector<Label> baf_filter(std::span<const Event> stream, const SensorGeometry& geometry,
                              const FilterConfig& config);

/// Nearest-neighbour filter: Real iff at least nnb_count earlier events on
/// neighbouring pixels (own pixel excluded) lie within nnb_dt.
std::vector<Label> nnb_filter(std::span<const Event> stream, const SensorGeometry& geometry,
                              const FilterConfig& config);

/// Refractory-period filter: Noise iff the same pixel fired less than
/// rp_period earlier.
std::vector<Label> rp_filter(std::span<const Event> stream, const SensorGeometry& geometry,
                             const FilterConfig& config);

inline constexpr double kSnrInfinity = std::numeric_limits<double>::infinity();

/// factor * log10(M / N) over the survivors (events predicted Real): M are
/// truly Real, N truly Noise. N = 0 gives +inf, M = 0 gives -inf.
/// Throws EmptyStream when nothing survives.
double snr_db(std::span<const Label> truth, std::span<const Label> predicted, double factor = 20.0);
double snr_db_counts(std::size_t real, std::size_t noise, double factor = 20.0);

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

/// Real is the positive class; events without a ground-truth label are skipped.
Confusion confusion_metrics(std::span<const Label> predicted, std::span<const Label> truth);

bool has_ground_truth(std::span<const Event> stream);

struct DenoiseResult {
  std::vector<Label> labels;
  double wall_seconds = 0.0;
  std::size_t events = 0;
  std::size_t inferences = 0;  // forward passes or per-event decisions
};

/// Named denoiser for the benchmark harness.
struct Denoiser {
  std::string name;
  std::size_t events_per_inference = 1;
  std::function<std::vector<Label>(std::span<const Event>)> run;
};

DenoiseResult run_denoiser(const Denoiser& denoiser, std::span<const Event> stream);

struct BenchRow {
  std::string method;
  std::size_t events = 0;
  double median_seconds = 0.0;
  double events_per_second = 0.0;
  std::size_t events_per_inference = 1;
  double snr = std::numeric_limits<double>::quiet_NaN();
  double precision = std::numeric_limits<double>::quiet_NaN();
  double recall = std::numeric_limits<double>::quiet_NaN();
  std::vector<Label> labels;  // from the last repetition
};

/// Times each denoiser `repetitions` (>= 3) times and reports medians.
std::vector<BenchRow> bench(std::span<const Denoiser> denoisers, std::span<const Event> stream,
                            std::size_t repetitions, double snr_factor = 20.0);

void write_bench_text(std::ostream& out, std::span<const BenchRow> rows);
void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows);

}  // namespace evd
