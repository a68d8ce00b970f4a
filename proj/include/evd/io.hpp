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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "evd/core.hpp"

namespace evd {

enum class EventFormat { Text, Binary };

// Binary layout (little-endian):
//   header  "EVD1" u16 width, u16 height, u32 reserved(0), u64 count   20 bytes
//   record  u64 t, u16 x, u16 y, i8 p, u8 label                         14 bytes
inline constexpr std::size_t kBinaryHeaderBytes = 20;
inline constexpr std::size_t kBinaryRecordBytes = 14;

struct EventFile {
  std::vector<Event> events;
  SensorGeometry geometry;
};

/// ".bin" and ".evd" select the binary layout, anything else is text.
EventFormat format_from_path(const std::filesystem::path& path);

EventFile read_events(const std::filesystem::path& path, EventFormat format);
inline EventFile read_events(const std::filesystem::path& path) {
  return read_events(path, format_from_path(path));
}

void write_events(const std::filesystem::path& path, std::span<const Event> events,
                  const SensorGeometry& geometry, EventFormat format);
inline void write_events(const std::filesystem::path& path, std::span<const Event> events,
                         const SensorGeometry& geometry) {
  write_events(path, events, geometry, format_from_path(path));
}

// In-memory forms, used by the file functions and by tests.
std::string encode_binary(std::span<const Event> events, const SensorGeometry& geometry);
EventFile decode_binary(std::string_view bytes, const std::string& origin = "<memory>");
std::string encode_text(std::span<const Event> events, const SensorGeometry& geometry);
EventFile decode_text(std::string_view text, const std::string& origin = "<memory>");

}  // namespace evd
