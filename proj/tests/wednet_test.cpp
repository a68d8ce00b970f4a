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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "evd/bec.hpp"
#include "evd/error.hpp"
#include "evd/nn/wednet.hpp"
#include "gradcheck.hpp"
#include "helpers.hpp"

using namespace evd;
using namespace evd::nn;

namespace {

struct Window {
  std::vector<Event> events;
  SensorGeometry geometry;
  std::vector<std::uint8_t> bone;
  NetInput input;
};

Window make_window_data(std::uint64_t seed, std::size_t n, std::uint16_t side = 32) {
  std::mt19937_64 rng(seed);
  Window w;
  w.geometry.width = w.geometry.height = side;
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    t += 1 + rng() % 97;
    Event e{t, std::uint16_t(rng() % side), std::uint16_t(rng() % side), (rng() & 1) ? std::int8_t(1) : std::int8_t(-1),
            (rng() & 1) ? Label::Real : Label::Noise};
    w.events.push_back(e);
  }
  w.bone = bone_events(w.events, w.geometry);
  w.input = make_input(w.events, w.geometry, w.bone);
  return w;
}

NetConfig small_config() {
  NetConfig c;
  c.levels = {{32, 8, 0.15, 6}, {8, 4, 0.3, 8}, {4, 4, 0.6, 8}, {2, 2, 1.0, 8}};
  return c;
}

}  // namespace

TEST(NetConfig, ShapeAlgebra) {
  auto c = desk_config();
  EXPECT_EQ(c.depth(), 4u);
  EXPECT_EQ(c.feature_width(0), kInputChannels);
  EXPECT_EQ(c.feature_width(2), 16u);
  EXPECT_EQ(c.propagated_width(0), 8u);
  EXPECT_EQ(c.propagated_width(3), 32u);
  EXPECT_EQ(c.level_kernel_width(4), 3u);
  auto p = init_params<float>(c, 1);
  ASSERT_EQ(p.sa.size(), 4u);
  ASSERT_EQ(p.fp.size(), 4u);
  EXPECT_EQ(p.sa[0].init.c_in, 4 + kInputChannels);
  EXPECT_EQ(p.sa[0].init.c_out, 8u);
  EXPECT_EQ(p.sa[1].init.c_in, 4 + 8u);
  EXPECT_EQ(p.sa[0].Q.c_out, p.sa[0].W.c_in);
  EXPECT_EQ(p.fp[3].c_in, 64 + 32u);
  EXPECT_EQ(p.fp[3].c_out, 32u);
  EXPECT_EQ(p.fp[0].c_in, 8 + kInputChannels);
  EXPECT_EQ(p.head.c_in, 8u);
  EXPECT_EQ(p.head.c_out, 1u);

  NetConfig k2;
  k2.levels = {{4, 2, 0.3, 3}};
  k2.kernel_width = 5;
  EXPECT_EQ(k2.level_kernel_width(1), 1u);

  NetConfig bad = c;
  bad.levels[1].T = 512;
  EXPECT_THROW(bad.check(), ConfigError);
  EXPECT_THROW(init_params<float>(bad, 1), ConfigError);
  bad = c;
  bad.levels[0].r = 0;
  EXPECT_THROW(WedNetParams<float>::zeros(bad), ConfigError);
  bad = c;
  bad.levels.clear();
  EXPECT_THROW(bad.check(), ConfigError);
  bad = c;
  bad.hyper.iterations = 0;
  EXPECT_THROW(bad.check(), ConfigError);
}

TEST(WedNet, OneLogitPerEvent) {
  auto w = make_window_data(1, 300);
  auto p = init_params<float>(small_config(), 2);
  EXPECT_EQ(wednet_forward(p, w.input).size(), 300u);
  auto tail = make_window_data(3, 5);
  EXPECT_EQ(wednet_forward(p, tail.input).size(), 5u);
  NetInput empty;
  EXPECT_TRUE(wednet_forward(p, empty).empty());
}

TEST(WedNet, ZeroHeadGivesBias) {
  auto w = make_window_data(4, 200);
  auto p = init_params<double>(small_config(), 5);
  std::fill(p.head.weight.begin(), p.head.weight.end(), 0.0);
  p.head.bias[0] = -0.375;
  for (double z : wednet_forward(p, w.input)) EXPECT_EQ(z, -0.375);
}

TEST(WedNet, Deterministic) {
  auto w = make_window_data(6, 400);
  auto p = init_params<float>(desk_config(), 7);
  auto a = wednet_forward(p, w.input);
  auto b = wednet_forward(p, w.input);
  EXPECT_EQ(a, b);
  EXPECT_EQ(init_params<float>(desk_config(), 7).sa[2].W.weight, p.sa[2].W.weight);
}

TEST(WedNet, PermutationConsistency) {
  auto w = make_window_data(8, 250);
  auto p = init_params<double>(small_config(), 9);
  auto base = wednet_forward(p, w.input);
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<std::size_t> perm(w.events.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    NetInput shuffled;
    for (auto i : perm) {
      shuffled.points.push_back(w.input.points[i]);
      shuffled.bone.push_back(w.input.bone[i]);
    }
    auto out = wednet_forward(p, shuffled);
    for (std::size_t k = 0; k < perm.size(); ++k) EXPECT_EQ(out[k], base[perm[k]]);
  }
}

TEST(WedNet, NoBoneEventsFallsBackToAll) {
  SensorGeometry g;
  g.width = g.height = 64;
  std::vector<Event> sparse;
  for (std::uint16_t i = 0; i < 20; ++i) sparse.push_back(Event{i * 10u, std::uint16_t(3 * i), std::uint16_t(3 * i), 1, Label::Noise});
  auto bone = bone_events(sparse, g);
  ASSERT_TRUE(std::none_of(bone.begin(), bone.end(), [](auto b) { return b; }));
  auto p = init_params<float>(small_config(), 1);
  auto out = wednet_forward(p, make_input(sparse, g, bone));
  EXPECT_EQ(out.size(), 20u);
  for (float z : out) EXPECT_TRUE(std::isfinite(z));
}

TEST(SetAbstraction, LevelOneShapesAtFullScale) {
  auto w = make_window_data(11, 2500, 128);
  auto cfg = full_config();
  auto p = init_params<float>(cfg, 1);
  Grid<float> feats(w.input.points.size(), 1, kInputChannels);
  auto out = set_abstraction_level<float>(w.input.points, feats, cfg.levels[0], w.bone, p.sa[0], cfg.hyper);
  EXPECT_EQ(out.points.size(), 2048u);
  EXPECT_EQ(out.features.rows, 2048u);
  EXPECT_EQ(out.features.C, 8u);
}

TEST(SetAbstraction, IdenticalPointsGivePooledBias) {
  std::vector<NormalizedPoint> pts(10, NormalizedPoint{0.3, 0.3, 0.3, 1});
  std::vector<std::uint8_t> elig(10, 1);
  LevelSpec spec{4, 3, 0.2, 2};
  SsfeParams<double> p;
  p.init = Conv1d<double>(4 + 1, 2, 3, true);
  p.init.bias = {0.25, -0.5};
  p.W = Conv1d<double>(5, 2, 3, false);
  p.Q = Conv1d<double>(2, 5, 3, false);
  p.lambda = {0.0, 0.0};
  Grid<double> feats(10, 1, 1);  // zero incoming features
  LcscHyperParams h;
  auto out = set_abstraction_level<double>(pts, feats, spec, elig, p, h);
  WindowStructure::Level lvl;
  lvl.centroids = out.centroids;
  lvl.group = ball_group(pts, out.centroids, spec.r, spec.K);
  lvl.relative = relative_transform(pts, lvl.group, lvl.centroids);
  for (std::size_t i = 0; i < lvl.relative.size(); i += 4) {
    EXPECT_EQ(lvl.relative[i], 0.0);
    EXPECT_EQ(lvl.relative[i + 1], 0.0);
    EXPECT_EQ(lvl.relative[i + 2], 0.0);
  }
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_DOUBLE_EQ(out.features.cell(t, 0)[0], 3 * 0.25);
    EXPECT_DOUBLE_EQ(out.features.cell(t, 0)[1], 0.0);
  }
}

TEST(SetAbstraction, ComposesSubOperations) {
  auto w = make_window_data(12, 120);
  auto cfg = small_config();
  auto p = init_params<double>(cfg, 3);
  Grid<double> feats(w.input.points.size(), 1, kInputChannels);
  std::mt19937_64 rng(1);
  for (auto& v : feats.v) v = double(rng() % 100) / 100.0;
  auto out = set_abstraction_level<double>(w.input.points, feats, cfg.levels[0], w.bone, p.sa[0], cfg.hyper);

  WindowStructure::Level lvl;
  lvl.centroids = farthest_event_sampling(w.input.points, cfg.levels[0].T, w.bone);
  lvl.group = ball_group(w.input.points, lvl.centroids, cfg.levels[0].r, cfg.levels[0].K);
  lvl.relative = relative_transform(w.input.points, lvl.group, lvl.centroids);
  auto manual = sum_pool(ssfe_forward(grouped_input(lvl, feats), p.sa[0], cfg.hyper));
  EXPECT_EQ(out.centroids, lvl.centroids);
  EXPECT_EQ(out.features.v, manual.v);
}

TEST(FeaturePropagation, Examples) {
  std::mt19937_64 rng(13);
  auto w = make_window_data(13, 40);
  std::vector<NormalizedPoint> src(w.input.points.begin(), w.input.points.begin() + 10);
  Grid<double> sf(10, 1, 3), skip(10, 1, 2);
  for (auto& v : sf.v) v = double(rng() % 100) / 50.0 - 1.0;
  for (auto& v : skip.v) v = double(rng() % 100) / 50.0 - 1.0;
  Conv1d<double> dec(5, 4, 1, true);
  for (auto& v : dec.weight) v = double(rng() % 100) / 50.0 - 1.0;
  for (auto& v : dec.bias) v = 0.1;

  // targets == sources: interpolation is the identity
  auto out = feature_propagation_level<double>(src, src, sf, skip, dec);
  Grid<double> cat(10, 1, 5);
  for (std::size_t i = 0; i < 10; ++i) {
    std::copy_n(sf.cell(i, 0), 3, cat.cell(i, 0));
    std::copy_n(skip.cell(i, 0), 2, cat.cell(i, 0) + 3);
  }
  EXPECT_EQ(out.v, sfe_forward(dec, cat).v);

  // random targets: three-step manual evaluation
  Grid<double> skip_t(40, 1, 2);
  for (auto& v : skip_t.v) v = double(rng() % 100) / 50.0 - 1.0;
  auto full = feature_propagation_level<double>(w.input.points, src, sf, skip_t, dec);
  auto interp = idw_interpolate(w.input.points, src, sf.v, 3);
  Grid<double> cat_t(40, 1, 5);
  for (std::size_t i = 0; i < 40; ++i) {
    std::copy_n(interp.data() + i * 3, 3, cat_t.cell(i, 0));
    std::copy_n(skip_t.cell(i, 0), 2, cat_t.cell(i, 0) + 3);
  }
  auto manual = sfe_forward(dec, cat_t);
  for (std::size_t i = 0; i < manual.size(); ++i) EXPECT_NEAR(full.v[i], manual.v[i], 1e-12);

  // constant sources and zero decode weights
  Grid<double> constant(10, 1, 3);
  std::fill(constant.v.begin(), constant.v.end(), 4.0);
  Conv1d<double> zero(5, 4, 1, true);
  for (double v : feature_propagation_level<double>(w.input.points, src, constant, skip_t, zero).v) EXPECT_EQ(v, 0.0);
}

TEST(Loss, Examples) {
  std::vector<double> pos{20.0};
  std::vector<Label> real{Label::Real};
  EXPECT_LT(loss_bce<double>(pos, real), 1e-8);
  std::vector<double> zero{0.0};
  EXPECT_NEAR(loss_bce<double>(zero, real), std::log(2.0), 1e-15);
  std::vector<double> big{-800.0};
  EXPECT_NEAR(loss_bce<double>(big, real), 800.0, 1e-9);
}

TEST(Loss, NaiveOracle) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-8, 8);
  std::vector<double> z(500);
  std::vector<Label> y(500);
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = u(rng);
    y[i] = (rng() % 3) ? Label::Real : Label::Noise;
  }
  double naive = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double s = 1.0 / (1.0 + std::exp(-z[i]));
    naive -= (y[i] == Label::Real) ? std::log(s) : std::log(1.0 - s);
  }
  naive /= double(z.size());
  EXPECT_NEAR(loss_bce<double>(z, y), naive, 1e-9);

  // balanced weights: each class contributes half of the total weight
  std::size_t n_real = std::count(y.begin(), y.end(), Label::Real);
  double weighted = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double s = 1.0 / (1.0 + std::exp(-z[i]));
    const bool r = y[i] == Label::Real;
    const double w = double(z.size()) / (2.0 * (r ? n_real : z.size() - n_real));
    weighted -= w * (r ? std::log(s) : std::log(1.0 - s));
  }
  EXPECT_NEAR(loss_bce<double>(z, y, LossWeighting::Balanced), weighted / double(z.size()), 1e-9);

  // Unknown labels are skipped
  std::vector<Label> with_unknown = y;
  with_unknown[0] = Label::Unknown;
  std::vector<double> grad;
  loss_bce<double>(z, with_unknown, LossWeighting::Uniform, &grad);
  EXPECT_EQ(grad[0], 0.0);
}

TEST(Backward, SaturatedBatchHasZeroGradient) {
  auto w = make_window_data(15, 150);
  for (auto& e : w.events) e.label = Label::Real;
  auto cfg = small_config();
  auto p = init_params<double>(cfg, 1);
  std::fill(p.head.weight.begin(), p.head.weight.end(), 0.0);
  p.head.bias[0] = 60.0;
  auto st = build_structure(w.input, cfg);
  auto grads = WedNetParams<double>::zeros(cfg);
  loss_and_gradient<double>(p, st, labels_of(w.events), LossWeighting::Uniform, grads);
  double inf_norm = 0;
  for_each_block<double>(grads, [&](const std::string&, const std::vector<std::uint32_t>&, std::span<double> v) {
    for (double x : v) inf_norm = std::max(inf_norm, std::abs(x));
  });
  EXPECT_LE(inf_norm, 1e-7);
}

TEST(Backward, LinearInLossScale) {
  auto w = make_window_data(16, 120);
  auto cfg = small_config();
  auto p = init_params<double>(cfg, 2);
  auto st = build_structure(w.input, cfg);
  ForwardCache<double> cache;
  auto logits = wednet_forward(p, st, &cache);
  std::vector<double> g(logits.size());
  std::mt19937_64 rng(3);
  for (auto& v : g) v = double(rng() % 1000) / 1000.0 - 0.5;
  auto g2 = g;
  for (auto& v : g2) v *= 2.0;
  auto a = WedNetParams<double>::zeros(cfg);
  auto b = WedNetParams<double>::zeros(cfg);
  wednet_backward<double>(p, st, cache, g, a);
  wednet_backward<double>(p, st, cache, g2, b);
  std::vector<double> va, vb;
  for_each_block<double>(a, [&](const std::string&, const std::vector<std::uint32_t>&, std::span<double> v) { va.insert(va.end(), v.begin(), v.end()); });
  for_each_block<double>(b, [&](const std::string&, const std::vector<std::uint32_t>&, std::span<double> v) { vb.insert(vb.end(), v.begin(), v.end()); });
  for (std::size_t i = 0; i < va.size(); ++i) EXPECT_EQ(vb[i], 2.0 * va[i]);
}

TEST(Backward, FiniteDifferencesDouble) {
  for (std::uint64_t seed : {1, 2}) {
    auto r = test::gradient_check(tiny_config(), seed, 200);
    EXPECT_EQ(r.probes, 200u);
    EXPECT_LE(r.max_relative_error, 1e-4) << r.worst_block;
  }
  auto multi = tiny_config();
  multi.hyper.iterations = 3;
  auto r = test::gradient_check(multi, 3, 200);
  EXPECT_LE(r.max_relative_error, 1e-4) << r.worst_block;
}

TEST(Backward, SinglePrecisionTracksDouble) {
  auto cfg = tiny_config();
  std::mt19937_64 rng(21);
  SensorGeometry g;
  auto ev = test::gradcheck_window(rng, 24, g);
  const auto truth = labels_of(ev);
  auto st = build_structure(make_input(ev, g, bone_events(ev, g)), cfg);
  auto pd = init_params<double>(cfg, 21);
  auto pf = cast_params<float>(pd);
  auto gd = WedNetParams<double>::zeros(cfg);
  auto gf = WedNetParams<float>::zeros(cfg);
  const double ld = loss_and_gradient<double>(pd, st, truth, LossWeighting::Balanced, gd);
  const double lf = loss_and_gradient<float>(pf, st, truth, LossWeighting::Balanced, gf);
  EXPECT_NEAR(lf, ld, 1e-5 * std::max(1.0, ld));
  std::vector<double> vd, vf;
  for_each_block<double>(gd, [&](const std::string&, const std::vector<std::uint32_t>&, std::span<double> v) { vd.insert(vd.end(), v.begin(), v.end()); });
  for_each_block<float>(gf, [&](const std::string&, const std::vector<std::uint32_t>&, std::span<float> v) { vf.insert(vf.end(), v.begin(), v.end()); });
  ASSERT_EQ(vd.size(), vf.size());
  double scale = 0;
  for (double x : vd) scale = std::max(scale, std::abs(x));
  for (std::size_t i = 0; i < vd.size(); ++i) EXPECT_NEAR(vf[i], vd[i], 1e-4 * std::max(scale, 1e-3));
}
