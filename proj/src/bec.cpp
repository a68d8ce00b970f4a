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

#include "evd/bec.hpp"

#include <numeric>

namespace evd {
namespace {

struct DisjointSet {
  std::vector<std::uint32_t> parent;

  std::uint32_t make() {
    parent.push_back(static_cast<std::uint32_t>(parent.size()));
    return parent.back();
  }
  std::uint32_t find(std::uint32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    // Smaller provisional id wins so roots keep raster order.
    if (a < b) parent[b] = a;
    else if (b < a) parent[a] = b;
  }
};

}  // namespace

BinaryFrame project_frame(std::span<const Event> events, const SensorGeometry& geometry) {
  BinaryFrame frame;
  frame.width = geometry.width;
  frame.height = geometry.height;
  frame.occupancy.assign(geometry.pixel_count(), 0);
  for (const auto& e : events) frame.occupancy[std::size_t(e.y) * geometry.width + e.x] = 1;
  return frame;
}

DomainLabeling label_connected_domains(const BinaryFrame& frame) {
  DomainLabeling out;
  out.width = frame.width;
  out.height = frame.height;
  out.label_of.assign(std::size_t(frame.width) * frame.height, 0);

  // First pass: provisional ids from the west and north neighbours.
  DisjointSet sets;
  sets.make();  // id 0 is background
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      if (!frame.at(x, y)) continue;
      const auto idx = std::size_t(y) * frame.width + x;
      const std::uint32_t west = x > 0 ? out.label_of[idx - 1] : 0;
      const std::uint32_t north = y > 0 ? out.label_of[idx - frame.width] : 0;
      if (west == 0 && north == 0) {
        out.label_of[idx] = sets.make();
      } else if (west != 0 && north != 0) {
        out.label_of[idx] = std::min(west, north);
        sets.unite(west, north);
      } else {
        out.label_of[idx] = west != 0 ? west : north;
      }
    }
  }

  // Second pass: resolve to roots and renumber densely in raster order.
  std::vector<std::uint32_t> dense(sets.parent.size(), 0);
  out.size_of.assign(1, 0);
  for (auto& label : out.label_of) {
    if (label == 0) continue;
    const auto root = sets.find(label);
    if (dense[root] == 0) {
      dense[root] = static_cast<std::uint32_t>(out.size_of.size());
      out.size_of.push_back(0);
    }
    label = dense[root];
    ++out.size_of[label];
  }
  return out;
}

std::vector<std::uint8_t> mark_bone_events(std::span<const Event> events,
                                           const DomainLabeling& labeling, std::size_t tau) {
  std::vector<std::uint8_t> bone(events.size(), 0);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto id = labeling.label_at(events[i].x, events[i].y);
    bone[i] = id != 0 && labeling.size_of[id] >= tau;
  }
  return bone;
}

std::vector<std::uint8_t> bone_events(std::span<const Event> events, const SensorGeometry& geometry,
                                      std::size_t tau) {
  return mark_bone_events(events, label_connected_domains(project_frame(events, geometry)), tau);
}

}  // namespace evd
