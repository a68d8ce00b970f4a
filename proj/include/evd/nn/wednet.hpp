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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "evd/core.hpp"
#include "evd/geometry.hpp"
#include "evd/nn/layers.hpp"

namespace evd::nn {

/// Per-event input channels: nx, ny, nt, polarity and the bone flag.
inline constexpr std::size_t kInputChannels = 5;

/// Shape of the hierarchy: abstraction levels top-down plus SFE settings.
struct NetConfig {
  std::vector<LevelSpec> levels;
  std::size_t kernel_width = 3;  // SFE taps along K; clipped to the largest odd value <= K
  LcscHyperParams hyper;
  double lambda_init = 0.01;

  /// Throws ConfigError for malformed level lists.
  void check() const;
  std::size_t depth() const { return levels.size(); }
  /// Channels of the level-j abstraction output (j = 0 is the raw per-event input).
  std::size_t feature_width(std::size_t j) const { return j == 0 ? kInputChannels : levels[j - 1].D; }
  /// Channels produced by the propagation step that lands on level j.
  std::size_t propagated_width(std::size_t j) const { return levels[j == 0 ? 0 : j - 1].D; }
  std::size_t level_kernel_width(std::size_t j) const;

  friend bool operator==(const NetConfig& a, const NetConfig& b) {
    return a.levels == b.levels && a.kernel_width == b.kernel_width &&
           a.hyper.iterations == b.hyper.iterations;
  }
};

/// Full-scale level sizes: T = [2048, 512, 64, 16], K = [64, 32, 16, 8].
NetConfig full_config();
/// Desk-scale preset: T = [256, 64, 16, 8], K = [16, 8, 8, 4].
NetConfig desk_config();
/// Two-level network used by the gradient checks.
NetConfig tiny_config();

template <class S>
struct WedNetParams {
  NetConfig config;
  std::vector<SsfeParams<S>> sa;  // sa[j-1] builds level j
  std::vector<Conv1d<S>> fp;      // fp[j] decodes features landing on level j
  Conv1d<S> head;                 // per-event affine classifier

  /// Zero-initialised parameters with every block shaped from `config`.
  static WedNetParams zeros(const NetConfig& config);
  std::size_t parameter_count() const;
};

using ModelParams = WedNetParams<float>;

/// Visits every parameter block as (name, dims, values).
template <class S>
void for_each_block(WedNetParams<S>& params,
                    const std::function<void(const std::string&, const std::vector<std::uint32_t>&,
                                             std::span<S>)>& fn);
template <class S>
void for_each_block(const WedNetParams<S>& params,
                    const std::function<void(const std::string&, const std::vector<std::uint32_t>&,
                                             std::span<const S>)>& fn);

template <class S>
WedNetParams<S> init_params(const NetConfig& config, std::uint64_t seed);

template <class To, class From>
WedNetParams<To> cast_params(const WedNetParams<From>& params);

/// Network input for one window: normalised points and their bone flags.
struct NetInput {
  std::vector<NormalizedPoint> points;
  std::vector<std::uint8_t> bone;
};

NetInput make_input(std::span<const Event> events, const SensorGeometry& geometry,
                    std::span<const std::uint8_t> bone);

/// Parameter-independent part of a forward pass: sampling, grouping and
/// interpolation plans for every level. Reusable across training epochs.
struct WindowStructure {
  std::vector<std::uint32_t> order;  // canonical position -> input position
  std::vector<std::uint8_t> bone;    // bone flags in canonical order
  struct Level {
    std::vector<NormalizedPoint> points;
    std::vector<std::uint32_t> centroids;  // into the previous level's points
    std::vector<std::uint32_t> group;      // T x K, into the previous level's points
    std::vector<double> relative;          // T x K x 4
  };
  std::vector<Level> levels;  // levels[0] holds only the canonical input points
  std::vector<IdwPlan> plans;  // plans[j]: level j+1 -> level j
};

WindowStructure build_structure(const NetInput& input, const NetConfig& config);

/// Builds the grouped tensor S~ (T x K x (4 + C)) for one abstraction level.
template <class S>
Grid<S> grouped_input(const WindowStructure::Level& level, const Grid<S>& prev_features);

/// Output of one abstraction level: centroid points plus pooled features.
template <class S>
struct LevelOutput {
  std::vector<std::uint32_t> centroids;
  std::vector<NormalizedPoint> points;
  Grid<S> features;  // T x 1 x D
};

/// Sampling, grouping, relative transform, SSFE and sum pooling for one level.
template <class S>
LevelOutput<S> set_abstraction_level(std::span<const NormalizedPoint> points, const Grid<S>& features,
                                     const LevelSpec& level, std::span<const std::uint8_t> eligible,
                                     const SsfeParams<S>& params, const LcscHyperParams& hyper);

/// Interpolation from sources, skip concatenation, rectified SFE decode.
template <class S>
Grid<S> feature_propagation_level(std::span<const NormalizedPoint> targets,
                                  std::span<const NormalizedPoint> sources,
                                  const Grid<S>& source_features, const Grid<S>& skip,
                                  const Conv1d<S>& decode);

template <class S>
struct ForwardCache {
  std::vector<Grid<S>> features;   // features[j]: level-j abstraction output
  std::vector<SsfeCache<S>> ssfe;  // per abstraction level
  std::vector<Grid<S>> fp_input;   // concat(interp, skip) landing on level j
  std::vector<Grid<S>> fp_pre;     // decode before the rectifier
  std::vector<Grid<S>> fp_out;     // rectified, level j
};

/// One logit per input event, in input order; logit > 0 means Real.
template <class S>
std::vector<S> wednet_forward(const WedNetParams<S>& params, const WindowStructure& structure,
                              ForwardCache<S>* cache = nullptr);
template <class S>
std::vector<S> wednet_forward(const WedNetParams<S>& params, const NetInput& input);

/// Accumulates d(loss)/d(params) into `grads` from d(loss)/d(logits).
template <class S>
void wednet_backward(const WedNetParams<S>& params, const WindowStructure& structure,
                     const ForwardCache<S>& cache, std::span<const S> grad_logits,
                     WedNetParams<S>& grads);

enum class LossWeighting { Uniform, Balanced };

/// Mean binary cross-entropy over Real/Noise labels (Real is the positive
/// class). Balanced weighting scales each class by n / (classes * n_class).
/// Unknown labels are skipped. When `grad` is given it receives d(loss)/d(logit).
template <class S>
double loss_bce(std::span<const S> logits, std::span<const Label> truth,
                LossWeighting weighting = LossWeighting::Uniform, std::vector<S>* grad = nullptr);

/// Forward, loss and backward for one window. Returns the loss.
template <class S>
double loss_and_gradient(const WedNetParams<S>& params, const WindowStructure& structure,
                         std::span<const Label> truth, LossWeighting weighting,
                         WedNetParams<S>& grads);

}  // namespace evd::nn
