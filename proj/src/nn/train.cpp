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

#include "evd/nn/train.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>

#include "evd/error.hpp"
#include "evd/eval.hpp"
#include "evd/parallel.hpp"

namespace evd::nn {
namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  return order;
}

std::vector<std::uint8_t> lambda_mask(ModelParams& params) {
  std::vector<std::uint8_t> mask;
  for_each_block<float>(params, [&](const std::string& name, const std::vector<std::uint32_t>&,
                                    std::span<float>) { mask.push_back(ends_with(name, ".lambda")); });
  return mask;
}

}  // namespace

void TrainConfig::check() const {
  if (!(lr >= 0 && std::isfinite(lr))) throw ConfigError("lr must be finite and non-negative");
  if (!(momentum >= 0 && momentum < 1)) throw ConfigError("momentum must lie in [0, 1)");
  if (batch == 0) throw ConfigError("batch must be positive");
  if (!(clip >= 0)) throw ConfigError("clip must be non-negative");
}

std::vector<std::span<float>> parameter_spans(ModelParams& params) {
  std::vector<std::span<float>> out;
  for_each_block<float>(params, [&](const std::string&, const std::vector<std::uint32_t>&,
                                    std::span<float> v) { out.push_back(v); });
  return out;
}

Evaluation evaluate(const ModelParams& params, std::span<const PreparedWindow> windows,
                    LossWeighting weighting, double snr_factor, std::size_t threads) {
  Evaluation ev{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  if (windows.empty()) return ev;
  std::vector<double> losses(windows.size());
  std::vector<std::size_t> real(windows.size()), noise(windows.size());
  parallel_for(windows.size(), threads, [&](std::size_t i) {
    const auto& w = windows[i];
    const auto logits = wednet_forward(params, w.structure);
    losses[i] = w.kept.empty() ? 0.0 : loss_bce<float>(logits, w.truth, weighting);
    for (std::size_t k = 0; k < logits.size(); ++k) {
      if (logits[k] <= 0.0f) continue;
      real[i] += w.truth[k] == Label::Real;
      noise[i] += w.truth[k] == Label::Noise;
    }
  });
  double total = 0.0;
  std::size_t m = 0, n = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    total += losses[i];
    m += real[i];
    n += noise[i];
  }
  ev.loss = total / double(windows.size());
  if (m + n > 0) ev.snr = snr_db_counts(m, n, snr_factor);
  return ev;
}

TrainResult train(const ModelParams& initial, std::span<const PreparedWindow> train_set,
                  std::span<const PreparedWindow> validation, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.check();
  if (train_set.empty()) throw ConfigError("training set is empty");

  TrainResult result{initial, {}};
  auto params = parameter_spans(result.params);
  const auto is_lambda = lambda_mask(result.params);

  auto velocity_store = ModelParams::zeros(initial.config);
  auto velocity = parameter_spans(velocity_store);

  const std::size_t slots = std::min(config.batch, train_set.size());
  std::vector<ModelParams> slot_grads(slots, ModelParams::zeros(initial.config));
  std::vector<std::vector<std::span<float>>> slot_spans;
  for (auto& g : slot_grads) slot_spans.push_back(parameter_spans(g));
  std::vector<double> slot_loss(slots);

  std::mt19937_64 rng(config.seed);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = shuffled(train_set.size(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += slots) {
      const std::size_t count = std::min(slots, order.size() - start);
      parallel_for(count, config.threads, [&](std::size_t s) {
        for (auto sp : slot_spans[s]) std::fill(sp.begin(), sp.end(), 0.0f);
        const auto& w = train_set[order[start + s]];
        slot_loss[s] = w.kept.empty()
                           ? 0.0
                           : loss_and_gradient<float>(result.params, w.structure, w.truth,
                                                      config.weighting, slot_grads[s]);
      });

      // Fixed-order reduction into slot 0, averaged over the batch.
      const float scale = 1.0f / float(count);
      double norm2 = 0.0;
      for (std::size_t b = 0; b < params.size(); ++b) {
        auto acc = slot_spans[0][b];
        for (std::size_t s = 1; s < count; ++s) {
          const auto src = slot_spans[s][b];
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
        }
        for (auto& g : acc) {
          g *= scale;
          norm2 += double(g) * double(g);
        }
      }
      for (std::size_t s = 0; s < count; ++s) {
        if (!std::isfinite(slot_loss[s])) throw DivergenceDetected(epoch);
        epoch_loss += slot_loss[s];
      }
      if (!std::isfinite(norm2)) throw DivergenceDetected(epoch);

      const double norm = std::sqrt(norm2);
      const float clip_scale =
          (config.clip > 0 && norm > config.clip) ? float(config.clip / norm) : 1.0f;
      const auto lr = float(config.lr);
      const auto mu = float(config.momentum);
      for (std::size_t b = 0; b < params.size(); ++b) {
        auto p = params[b];
        auto v = velocity[b];
        const auto g = slot_spans[0][b];
        for (std::size_t i = 0; i < p.size(); ++i) {
          v[i] = mu * v[i] + g[i] * clip_scale;
          p[i] -= lr * v[i];
          if (is_lambda[b] && p[i] < 0.0f) p[i] = 0.0f;
        }
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / double(train_set.size());
    const auto ev = evaluate(result.params, validation, config.weighting, 20.0, config.threads);
    rec.val_loss = ev.loss;
    rec.val_snr = ev.snr;
    if (!std::isfinite(rec.train_loss) || (!validation.empty() && !std::isfinite(rec.val_loss))) {
      throw DivergenceDetected(epoch);
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

void write_history_csv(std::ostream& out, std::span<const EpochRecord> history) {
  out << "epoch,train_loss,val_loss,val_snr_db\n";
  out << std::setprecision(9);
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_snr << '\n';
  }
}

}  // namespace evd::nn
