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

#include <span>
#include <vector>

#include "evd/core.hpp"
#include "evd/nn/wednet.hpp"
#include "evd/temporal.hpp"

namespace evd {

/// Window-level settings shared by training and inference.
struct PipelineConfig {
  std::size_t window = 4096;  // events per window
  TwConfig tw;
  std::size_t bec_tau = 2;
};

/// A window after the temporal filter and the bone-event check, ready for
/// the network.
struct PreparedWindow {
  std::size_t offset = 0;                // first event in the source stream
  std::vector<std::size_t> kept;         // stream indices entering the network
  std::vector<std::size_t> dropped;      // stream indices removed by TW
  nn::WindowStructure structure;
  std::vector<Label> truth;              // labels of the kept events
  std::vector<Label> dropped_truth;      // labels of the TW-dropped events
};

PreparedWindow prepare_window(const EventWindow& window, const SensorGeometry& geometry,
                              const PipelineConfig& pipeline, const nn::NetConfig& net);

std::vector<PreparedWindow> prepare_windows(std::span<const Event> stream,
                                            const SensorGeometry& geometry,
                                            const PipelineConfig& pipeline,
                                            const nn::NetConfig& net, std::size_t threads = 1);

/// Labels from the temporal window filter alone.
std::vector<Label> tw_denoise(std::span<const Event> stream, const PipelineConfig& pipeline);

/// Full TW -> BEC -> network pipeline; every event receives Real or Noise.
std::vector<Label> wednet_denoise(std::span<const Event> stream, const SensorGeometry& geometry,
                                  const nn::ModelParams& params, const PipelineConfig& pipeline,
                                  std::size_t threads = 1);

/// Writes network decisions for prepared windows into a per-event label array.
void label_prepared(const PreparedWindow& window, std::span<const float> logits,
                    std::span<Label> out);

}  // namespace evd
