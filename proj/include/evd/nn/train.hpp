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
#include <ostream>
#include <span>
#include <vector>

#include "evd/nn/wednet.hpp"
#include "evd/pipeline.hpp"

namespace evd::nn {

struct TrainConfig {
  std::size_t epochs = 20;
  double lr = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  std::size_t batch = 4;  // windows per update
  LossWeighting weighting = LossWeighting::Balanced;
  double clip = 5.0;  // global gradient-norm bound, 0 disables
  std::size_t threads = 1;

  void check() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_snr = 0.0;  // NaN when there is no validation data
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
};

/// Validation loss and SNR of the full pipeline over prepared windows.
struct Evaluation {
  double loss = 0.0;
  double snr = 0.0;
};
Evaluation evaluate(const ModelParams& params, std::span<const PreparedWindow> windows,
                    LossWeighting weighting, double snr_factor = 20.0, std::size_t threads = 1);

/// Called after every epoch; useful for progress output.
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch SGD with momentum starting from `initial`. The result depends
/// only on the inputs and config.seed, not on config.threads.
/// Throws DivergenceDetected on a non-finite loss.
TrainResult train(const ModelParams& initial, std::span<const PreparedWindow> train_set,
                  std::span<const PreparedWindow> validation, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

void write_history_csv(std::ostream& out, std::span<const EpochRecord> history);

/// Flat views over every parameter block, in checkpoint order.
std::vector<std::span<float>> parameter_spans(ModelParams& params);

}  // namespace evd::nn
