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
#include <span>
#include <vector>

namespace evd {

enum class Label : std::uint8_t { Unknown = 0, Real = 1, Noise = 2 };

struct Event {
  std::uint64_t t = 0;  // microseconds
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t p = 1;  // -1 or +1
  Label label = Label::Unknown;

  friend bool operator==(const Event&, const Event&) = default;
};

struct SensorGeometry {
  std::uint16_t width = 128;
  std::uint16_t height = 128;
  double gain_a = 1.0;
  double offset_b = 1.0;
  double threshold_theta = 0.25;
  double noise_rate_eta = 0.0;  // events / pixel / second

  std::size_t pixel_count() const { return std::size_t{width} * height; }
  bool contains(const Event& e) const { return e.x < width && e.y < height; }
  // Throws ConfigError when the invariants do not hold.
  void check() const;

  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

/// A contiguous run of events labelled as one denoising unit.
struct EventWindow {
  std::vector<Event> events;
  std::size_t offset = 0;  // index of the first event in the source stream
  std::uint64_t t_min = 0;
  std::uint64_t t_max = 0;
  double t_mu = 0.0;
  bool tail = false;  // shorter than the requested window size

  std::size_t size() const { return events.size(); }
};

/// Mean timestamp, computed on offsets from the first timestamp so that it is
/// exact for realistic stream lengths.
double mean_timestamp(std::span<const Event> events);

/// Stable time sort plus bounds and polarity checks.
/// Throws OutOfBounds / NegativePolarityEncoding with the offending input index.
std::vector<Event> validate_stream(std::vector<Event> events, const SensorGeometry& geometry);

/// Splits a validated stream into consecutive windows of w events; the last
/// window may be shorter and is flagged as a tail.
std::vector<EventWindow> partition_windows(std::span<const Event> stream, std::size_t w);

EventWindow make_window(std::span<const Event> events, std::size_t offset = 0);

std::vector<Label> labels_of(std::span<const Event> events);

}  // namespace evd
