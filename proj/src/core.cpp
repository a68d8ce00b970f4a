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

#include "evd/core.hpp"

#include <algorithm>
#include <stdexcept>

#include "evd/error.hpp"

namespace evd {

void SensorGeometry::check() const {
  if (width < 1 || height < 1) throw ConfigError("sensor dimensions must be at least 1x1");
  if (!(threshold_theta > 0.0)) throw ConfigError("threshold_theta must be positive");
  if (!(noise_rate_eta >= 0.0)) throw ConfigError("noise_rate_eta must be non-negative");
}

double mean_timestamp(std::span<const Event> events) {
  if (events.empty()) return 0.0;
  const std::uint64_t base = events.front().t;
  long double acc = 0.0L;
  for (const auto& e : events) acc += static_cast<long double>(e.t - base);
  return static_cast<double>(static_cast<long double>(base) + acc / events.size());
}

std::vector<Event> validate_stream(std::vector<Event> events, const SensorGeometry& geometry) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.p != 1 && e.p != -1) throw NegativePolarityEncoding(i);
    if (!geometry.contains(e)) throw OutOfBounds(i);
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  return events;
}

EventWindow make_window(std::span<const Event> events, std::size_t offset) {
  EventWindow w;
  w.events.assign(events.begin(), events.end());
  w.offset = offset;
  if (!events.empty()) {
    w.t_min = events.front().t;
    w.t_max = events.back().t;
    w.t_mu = std::clamp(mean_timestamp(events), static_cast<double>(w.t_min),
                        static_cast<double>(w.t_max));
  }
  return w;
}

std::vector<EventWindow> partition_windows(std::span<const Event> stream, std::size_t w) {
  if (w < 1) throw std::invalid_argument("window size must be >= 1");
  std::vector<EventWindow> out;
  out.reserve((stream.size() + w - 1) / w);
  for (std::size_t begin = 0; begin < stream.size(); begin += w) {
    const std::size_t n = std::min(w, stream.size() - begin);
    auto win = make_window(stream.subspan(begin, n), begin);
    win.tail = n < w;
    out.push_back(std::move(win));
  }
  return out;
}

std::vector<Label> labels_of(std::span<const Event> events) {
  std::vector<Label> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(e.label);
  return out;
}

}  // namespace evd
