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

#include "evd/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <iomanip>
#include <optional>
#include <sstream>

#include "evd/error.hpp"

namespace evd {
namespace {

template <class Visit>
void for_neighbours(const Event& e, const SensorGeometry& g, int radius, Visit&& visit) {
  const int x0 = std::max(0, int(e.x) - radius);
  const int x1 = std::min(int(g.width) - 1, int(e.x) + radius);
  const int y0 = std::max(0, int(e.y) - radius);
  const int y1 = std::min(int(g.height) - 1, int(e.y) + radius);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (x == e.x && y == e.y) continue;
      visit(std::size_t(y) * g.width + x);
    }
  }
}

std::string fmt_number(double v, int precision = 3) {
  if (std::isnan(v)) return "-";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

}  // namespace

void FilterConfig::check() const {
  if (!(baf_dt >= 0 && nnb_dt >= 0 && rp_period >= 0) || radius < 0) {
    throw ConfigError("filter parameters must be non-negative");
  }
}

std::vector<Label> baf_filter(std::span<const Event> stream, const SensorGeometry& geometry,
                              const FilterConfig& config) {
  std::vector<std::optional<std::uint64_t>> last(geometry.pixel_count());
  std::vector<Label> out(stream.size(), Label::Noise);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto& e = stream[i];
    bool supported = false;
    for_neighbours(e, geometry, config.radius, [&](std::size_t pix) {
      if (last[pix] && static_cast<double>(e.t - *last[pix]) <= config.baf_dt) supported = true;
    });
    if (supported) out[i] = Label::Real;
    last[std::size_t(e.y) * geometry.width + e.x] = e.t;
  }
  return out;
}

std::vector<Label> nnb_filter(std::span<const Event> stream, const SensorGeometry& geometry,
                              const FilterConfig& config) {
  std::vector<std::deque<std::uint64_t>> recent(geometry.pixel_count());
  std::vector<Label> out(stream.size(), Label::Noise);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto& e = stream[i];
    std::size_t count = 0;
    for_neighbours(e, geometry, config.radius, [&](std::size_t pix) {
      auto& q = recent[pix];
      while (!q.empty() && static_cast<double>(e.t - q.front()) > config.nnb_dt) q.pop_front();
      count += q.size();
    });
    if (count >= config.nnb_count) out[i] = Label::Real;
    recent[std::size_t(e.y) * geometry.width + e.x].push_back(e.t);
  }
  return out;
}

std::vector<Label> rp_filter(std::span<const Event> stream, const SensorGeometry& geometry,
                             const FilterConfig& config) {
  std::vector<std::optional<std::uint64_t>> last(geometry.pixel_count());
  std::vector<Label> out(stream.size(), Label::Real);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto& e = stream[i];
    auto& slot = last[std::size_t(e.y) * geometry.width + e.x];
    if (slot && static_cast<double>(e.t - *slot) < config.rp_period) out[i] = Label::Noise;
    slot = e.t;
  }
  return out;
}

double snr_db_counts(std::size_t real, std::size_t noise, double factor) {
  if (real == 0 && noise == 0) throw EmptyStream();
  if (noise == 0) return kSnrInfinity;
  if (real == 0) return -kSnrInfinity;
  return factor * std::log10(static_cast<double>(real) / static_cast<double>(noise));
}

double snr_db(std::span<const Label> truth, std::span<const Label> predicted, double factor) {
  if (truth.size() != predicted.size()) throw ShapeMismatch("one prediction per event");
  std::size_t m = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] != Label::Real) continue;
    m += truth[i] == Label::Real;
    n += truth[i] == Label::Noise;
  }
  return snr_db_counts(m, n, factor);
}

Confusion confusion_metrics(std::span<const Label> predicted, std::span<const Label> truth) {
  if (truth.size() != predicted.size()) throw ShapeMismatch("one prediction per event");
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == Label::Unknown) continue;
    const bool pos = predicted[i] == Label::Real;
    if (truth[i] == Label::Real) (pos ? c.tp : c.fn)++;
    else (pos ? c.fp : c.tn)++;
  }
  auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : double(a) / double(b); };
  c.precision = ratio(c.tp, c.tp + c.fp);
  c.recall = ratio(c.tp, c.tp + c.fn);
  c.f1 = (c.precision + c.recall) > 0 ? 2 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
  c.accuracy = ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn);
  return c;
}

bool has_ground_truth(std::span<const Event> stream) {
  return !stream.empty() &&
         std::all_of(stream.begin(), stream.end(), [](const Event& e) { return e.label != Label::Unknown; });
}

DenoiseResult run_denoiser(const Denoiser& denoiser, std::span<const Event> stream) {
  DenoiseResult r;
  const auto start = std::chrono::steady_clock::now();
  r.labels = denoiser.run(stream);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.events = stream.size();
  const auto per = std::max<std::size_t>(1, denoiser.events_per_inference);
  r.inferences = (stream.size() + per - 1) / per;
  if (r.labels.size() != stream.size()) throw ShapeMismatch("denoiser must label every event");
  return r;
}

std::vector<BenchRow> bench(std::span<const Denoiser> denoisers, std::span<const Event> stream,
                            std::size_t repetitions, double snr_factor) {
  if (repetitions < 3) throw ConfigError("bench needs at least 3 repetitions");
  const bool truth = has_ground_truth(stream);
  const auto truth_labels = labels_of(stream);
  std::vector<BenchRow> rows;
  for (const auto& d : denoisers) {
    BenchRow row;
    row.method = d.name;
    row.events = stream.size();
    row.events_per_inference = d.events_per_inference;
    std::vector<double> times;
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
      auto r = run_denoiser(d, stream);
      times.push_back(r.wall_seconds);
      row.labels = std::move(r.labels);
    }
    std::sort(times.begin(), times.end());
    row.median_seconds = times[times.size() / 2];
    row.events_per_second =
        row.median_seconds > 0 ? double(stream.size()) / row.median_seconds : kSnrInfinity;
    if (truth) {
      try {
        row.snr = snr_db(truth_labels, row.labels, snr_factor);
      } catch (const EmptyStream&) {
        row.snr = std::numeric_limits<double>::quiet_NaN();
      }
      const auto c = confusion_metrics(row.labels, truth_labels);
      row.precision = c.precision;
      row.recall = c.recall;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_bench_text(std::ostream& out, std::span<const BenchRow> rows) {
  out << std::left << std::setw(10) << "method" << std::right << std::setw(10) << "events"
      << std::setw(16) << "median_s" << std::setw(16) << "events/s" << std::setw(12) << "ev/infer"
      << std::setw(10) << "SNR_dB" << std::setw(11) << "precision" << std::setw(9) << "recall" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(10) << r.method << std::right << std::setw(10) << r.events
        << std::setw(16) << fmt_number(r.median_seconds, 6) << std::setw(16)
        << fmt_number(r.events_per_second, 0) << std::setw(12) << r.events_per_inference
        << std::setw(10) << fmt_number(r.snr, 2) << std::setw(11) << fmt_number(r.precision, 4)
        << std::setw(9) << fmt_number(r.recall, 4) << '\n';
  }
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows) {
  out << "method,events,median_seconds,events_per_second,events_per_inference,SNR_dB,precision,recall\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.events << ',' << fmt_number(r.median_seconds, 6) << ','
        << fmt_number(r.events_per_second, 0) << ',' << r.events_per_inference << ','
        << fmt_number(r.snr, 4) << ',' << fmt_number(r.precision, 6) << ','
        << fmt_number(r.recall, 6) << '\n';
  }
}

}  // namespace evd
