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
#include <string>

#include "evd/nn/wednet.hpp"

namespace evd::nn {

// "WEDN", u32 version, then blocks of
//   u32 name length, name bytes (UTF-8), u32 rank, u32 dims[rank], f32 values[]
// and a trailing CRC32 of everything before it. All integers little-endian.
// Network shape travels in the "meta.levels" (L x 4: T, K, r, D) and
// "meta.net" (kernel width, iterations, lambda_init) blocks.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const ModelParams& params);
ModelParams decode_checkpoint(std::string_view bytes, const std::string& origin = "<memory>");

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
/// Throws MissingCheckpoint when the file does not exist.
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace evd::nn
