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

#include "evd/pipeline.hpp"

#include "evd/bec.hpp"
#include "evd/parallel.hpp"

namespace evd {

PreparedWindow prepare_window(const EventWindow& window, const SensorGeometry& geometry,
                              const PipelineConfig& pipeline, const nn::NetConfig& net) {
  PreparedWindow out;
  out.offset = window.offset;
  const auto t_lim = adaptive_t_lim(temporal_stats(window.events), pipeline.tw);
  const auto split = tw_filter(window, t_lim);
  for (auto i : split.kept_index) out.kept.push_back(window.offset + i);
  for (auto i : split.dropped_index) out.dropped.push_back(window.offset + i);
  out.truth = labels_of(split.kept);
  out.dropped_truth = labels_of(split.dropped);
  const auto bone = bone_events(split.kept, geometry, pipeline.bec_tau);
  out.structure = nn::build_structure(nn::make_input(split.kept, geometry, bone), net);
  return out;
}

std::vector<PreparedWindow> prepare_windows(std::span<const Event> stream,
                                            const SensorGeometry& geometry,
                                            const PipelineConfig& pipeline,
                                            const nn::NetConfig& net, std::size_t threads) {
  const auto windows = partition_windows(stream, pipeline.window);
  std::vector<PreparedWindow> out(windows.size());
  parallel_for(windows.size(), threads,
               [&](std::size_t i) { out[i] = prepare_window(windows[i], geometry, pipeline, net); });
  return out;
}

std::vector<Label> tw_denoise(std::span<const Event> stream, const PipelineConfig& pipeline) {
  std::vector<Label> out(stream.size(), Label::Noise);
  for (const auto& w : partition_windows(stream, pipeline.window)) {
    const auto split = tw_filter(w, adaptive_t_lim(temporal_stats(w.events), pipeline.tw));
    for (auto i : split.kept_index) out[w.offset + i] = Label::Real;
  }
  return out;
}

void label_prepared(const PreparedWindow& window, std::span<const float> logits,
                    std::span<Label> out) {
  for (auto i : window.dropped) out[i] = Label::Noise;
  for (std::size_t k = 0; k < window.kept.size(); ++k) {
    out[window.kept[k]] = logits[k] > 0.0f ? Label::Real : Label::Noise;
  }
}

std::vector<Label> wednet_denoise(std::span<const Event> stream, const SensorGeometry& geometry,
                                  const nn::ModelParams& params, const PipelineConfig& pipeline,
                                  std::size_t threads) {
  std::vector<Label> out(stream.size(), Label::Noise);
  const auto windows = partition_windows(stream, pipeline.window);
  parallel_for(windows.size(), threads, [&](std::size_t i) {
    const auto prepared = prepare_window(windows[i], geometry, pipeline, params.config);
    const auto logits = nn::wednet_forward(params, prepared.structure);
    label_prepared(prepared, logits, out);
  });
  return out;
}

}  // namespace evd
