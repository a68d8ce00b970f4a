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
#include <limits>
#include <span>
#include <vector>

#include "evd/core.hpp"

namespace evd {

struct BinaryFrame {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<std::uint8_t> occupancy;  // row-major, 0 or 1

  bool at(int x, int y) const { return occupancy[std::size_t(y) * width + x] != 0; }
};

struct DomainLabeling {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<std::uint32_t> label_of;  // per pixel, 0 = background
  std::vector<std::uint32_t> size_of;   // per id; size_of[0] is unused

  std::uint32_t component_count() const { return static_cast<std::uint32_t>(size_of.size() - 1); }
  std::uint32_t label_at(int x, int y) const { return label_of[std::size_t(y) * width + x]; }
};

inline constexpr std::size_t kDefaultBecTau = 2;
inline constexpr std::size_t kNeverBone = std::numeric_limits<std::size_t>::max();

BinaryFrame project_frame(std::span<const Event> events, const SensorGeometry& geometry);

/// 4-connected components, ids dense from 1 in raster order of each
/// component's first pixel.
DomainLabeling label_connected_domains(const BinaryFrame& frame);

/// An event is a bone event when its pixel's component spans >= tau pixels.
std::vector<std::uint8_t> mark_bone_events(std::span<const Event> events,
                                           const DomainLabeling& labeling, std::size_t tau);

/// project + label + mark in one call.
std::vector<std::uint8_t> bone_events(std::span<const Event> events, const SensorGeometry& geometry,
                                      std::size_t tau = kDefaultBecTau);

}  // namespace evd
