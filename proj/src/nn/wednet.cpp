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

#include "evd/nn/wednet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>

#include "evd/error.hpp"

namespace evd::nn {
namespace {

template <class S>
void rectify(Grid<S>& g) {
  for (auto& v : g.v) v = v > S(0) ? v : S(0);
}

template <class S>
Grid<S> gather_rows(const Grid<S>& src, std::span<const std::uint32_t> index) {
  Grid<S> out(index.size(), 1, src.C);
  for (std::size_t i = 0; i < index.size(); ++i) {
    std::copy_n(src.cell(index[i], 0), src.C, out.cell(i, 0));
  }
  return out;
}

template <class S>
Grid<S> concat_channels(const Grid<S>& a, const Grid<S>& b) {
  if (a.rows != b.rows || a.K != b.K) throw ShapeMismatch("concat rows");
  Grid<S> out(a.rows, a.K, a.C + b.C);
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t k = 0; k < a.K; ++k) {
      std::copy_n(a.cell(r, k), a.C, out.cell(r, k));
      std::copy_n(b.cell(r, k), b.C, out.cell(r, k) + a.C);
    }
  }
  return out;
}

template <class S>
Grid<S> interpolate(const IdwPlan& plan, const Grid<S>& sources) {
  Grid<S> out(plan.targets, 1, sources.C);
  out.v = idw_apply<S>(plan, sources.v, sources.C);
  return out;
}

template <class S>
void fill_uniform(std::vector<S>& v, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& x : v) x = static_cast<S>(dist(rng));
}

template <class S>
void visit_conv(Conv1d<S>& conv, const std::string& name,
                const std::function<void(const std::string&, const std::vector<std::uint32_t>&,
                                         std::span<S>)>& fn) {
  fn(name + ".weight",
     {static_cast<std::uint32_t>(conv.width), static_cast<std::uint32_t>(conv.c_in),
      static_cast<std::uint32_t>(conv.c_out)},
     conv.weight);
  if (conv.has_bias) fn(name + ".bias", {static_cast<std::uint32_t>(conv.c_out)}, conv.bias);
}

}  // namespace

void NetConfig::check() const {
  if (levels.empty()) throw ConfigError("network needs at least one level");
  if (kernel_width < 1) throw ConfigError("kernel width must be >= 1");
  if (hyper.iterations < 1) throw ConfigError("LCSC iterations must be >= 1");
  if (!(lambda_init >= 0.0)) throw ConfigError("initial soft threshold must be >= 0");
  for (std::size_t j = 0; j < levels.size(); ++j) {
    levels[j].check();
    if (j > 0 && levels[j].T > levels[j - 1].T) {
      throw ConfigError("level " + std::to_string(j + 1) + " samples more centroids than level " +
                        std::to_string(j));
    }
  }
}

std::size_t NetConfig::level_kernel_width(std::size_t j) const {
  std::size_t w = std::min(kernel_width, levels[j - 1].K);
  if (w % 2 == 0) --w;
  return std::max<std::size_t>(w, 1);
}

NetConfig full_config() {
  NetConfig c;
  c.levels = {{2048, 64, 0.05, 8}, {512, 32, 0.1, 16}, {64, 16, 0.2, 32}, {16, 8, 0.4, 64}};
  return c;
}

NetConfig desk_config() {
  NetConfig c;
  c.levels = {{256, 16, 0.05, 8}, {64, 8, 0.1, 16}, {16, 8, 0.2, 32}, {8, 4, 0.4, 64}};
  return c;
}

NetConfig tiny_config() {
  NetConfig c;
  c.levels = {{8, 4, 0.3, 3}, {4, 2, 0.6, 3}};
  return c;
}

template <class S>
WedNetParams<S> WedNetParams<S>::zeros(const NetConfig& config) {
  config.check();
  WedNetParams<S> p;
  p.config = config;
  const std::size_t L = config.depth();
  for (std::size_t j = 1; j <= L; ++j) {
    const std::size_t c_in = 4 + config.feature_width(j - 1);
    const std::size_t d = config.levels[j - 1].D;
    const std::size_t w = config.level_kernel_width(j);
    SsfeParams<S> sa;
    sa.init = Conv1d<S>(c_in, d, w, true);
    sa.W = Conv1d<S>(c_in, d, w, false);
    sa.Q = Conv1d<S>(d, c_in, w, false);
    sa.lambda.assign(d, S(0));
    p.sa.push_back(std::move(sa));
  }
  for (std::size_t j = 0; j < L; ++j) {
    const std::size_t c_in = config.propagated_width(j + 1) + config.feature_width(j);
    p.fp.emplace_back(c_in, config.propagated_width(j), 1, true);
  }
  p.head = Conv1d<S>(config.propagated_width(0), 1, 1, true);
  return p;
}

template <class S>
std::size_t WedNetParams<S>::parameter_count() const {
  std::size_t n = 0;
  for_each_block<S>(*this, [&](const std::string&, const std::vector<std::uint32_t>&,
                               std::span<const S> v) { n += v.size(); });
  return n;
}

template <class S>
void for_each_block(WedNetParams<S>& params,
                    const std::function<void(const std::string&, const std::vector<std::uint32_t>&,
                                             std::span<S>)>& fn) {
  for (std::size_t j = 0; j < params.sa.size(); ++j) {
    const std::string base = "sa" + std::to_string(j + 1);
    visit_conv(params.sa[j].init, base + ".init", fn);
    visit_conv(params.sa[j].W, base + ".W", fn);
    visit_conv(params.sa[j].Q, base + ".Q", fn);
    fn(base + ".lambda", {static_cast<std::uint32_t>(params.sa[j].lambda.size())}, params.sa[j].lambda);
  }
  for (std::size_t j = 0; j < params.fp.size(); ++j) visit_conv(params.fp[j], "fp" + std::to_string(j), fn);
  visit_conv(params.head, std::string("head"), fn);
}

template <class S>
void for_each_block(const WedNetParams<S>& params,
                    const std::function<void(const std::string&, const std::vector<std::uint32_t>&,
                                             std::span<const S>)>& fn) {
  auto& mutable_params = const_cast<WedNetParams<S>&>(params);
  for_each_block<S>(mutable_params, [&](const std::string& name, const std::vector<std::uint32_t>& dims,
                                        std::span<S> v) { fn(name, dims, std::span<const S>(v)); });
}

template <class S>
WedNetParams<S> init_params(const NetConfig& config, std::uint64_t seed) {
  auto p = WedNetParams<S>::zeros(config);
  std::mt19937_64 rng(seed);
  auto fan_in = [](const Conv1d<S>& c) { return double(c.c_in * c.width); };
  for (std::size_t j = 0; j < p.sa.size(); ++j) {
    auto& sa = p.sa[j];
    // Sum pooling over K neighbours; dividing by K keeps pooled features O(1).
    const double pool = double(config.levels[j].K);
    fill_uniform(sa.init.weight, std::sqrt(6.0 / fan_in(sa.init)) / pool, rng);
    // Offsets inside a group are O(r); rescale so they start on par with the rest.
    for (std::size_t tap = 0; tap < sa.init.width; ++tap) {
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t o = 0; o < sa.init.c_out; ++o) sa.init.w(tap, i, o) /= S(config.levels[j].r);
      }
    }
    std::fill(sa.init.bias.begin(), sa.init.bias.end(), S(0.01));
    // Small analysis/synthesis maps keep the first LCSC step close to E_0.
    fill_uniform(sa.W.weight, 0.5 / std::sqrt(fan_in(sa.W)) / pool, rng);
    fill_uniform(sa.Q.weight, 0.5 / std::sqrt(fan_in(sa.Q)), rng);
    std::fill(sa.lambda.begin(), sa.lambda.end(), static_cast<S>(config.lambda_init));
  }
  for (auto& fp : p.fp) {
    fill_uniform(fp.weight, std::sqrt(6.0 / fan_in(fp)), rng);
    std::fill(fp.bias.begin(), fp.bias.end(), S(0.01));
  }
  fill_uniform(p.head.weight, 0.1 * std::sqrt(3.0 / fan_in(p.head)), rng);
  return p;
}

template <class To, class From>
WedNetParams<To> cast_params(const WedNetParams<From>& params) {
  auto out = WedNetParams<To>::zeros(params.config);
  std::vector<std::span<const From>> src;
  for_each_block<From>(params, [&](const std::string&, const std::vector<std::uint32_t>&,
                                   std::span<const From> v) { src.push_back(v); });
  std::size_t i = 0;
  for_each_block<To>(out, [&](const std::string&, const std::vector<std::uint32_t>&, std::span<To> v) {
    std::transform(src[i].begin(), src[i].end(), v.begin(), [](From x) { return static_cast<To>(x); });
    ++i;
  });
  return out;
}

NetInput make_input(std::span<const Event> events, const SensorGeometry& geometry,
                    std::span<const std::uint8_t> bone) {
  NetInput in;
  in.points = normalize_coords(events, geometry);
  in.bone.assign(bone.begin(), bone.end());
  if (in.bone.size() != in.points.size()) throw ShapeMismatch("bone flags per event");
  return in;
}

WindowStructure build_structure(const NetInput& input, const NetConfig& config) {
  config.check();
  if (input.bone.size() != input.points.size()) throw ShapeMismatch("bone flags per event");
  WindowStructure st;
  const std::size_t n = input.points.size();
  st.order.resize(n);
  std::iota(st.order.begin(), st.order.end(), 0U);
  // Canonical order makes the result independent of how equal-time events
  // were presented.
  std::stable_sort(st.order.begin(), st.order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto& pa = input.points[a];
    const auto& pb = input.points[b];
    return std::tie(pa.nt, pa.nx, pa.ny, pa.p) < std::tie(pb.nt, pb.nx, pb.ny, pb.p);
  });

  WindowStructure::Level base;
  base.points.reserve(n);
  std::vector<std::uint8_t> eligible(n);
  bool any_bone = false;
  for (std::size_t i = 0; i < n; ++i) {
    base.points.push_back(input.points[st.order[i]]);
    eligible[i] = input.bone[st.order[i]];
    st.bone.push_back(eligible[i] ? 1 : 0);
    any_bone = any_bone || eligible[i];
  }
  if (!any_bone) std::fill(eligible.begin(), eligible.end(), 1);
  st.levels.push_back(std::move(base));
  if (n == 0) return st;

  for (std::size_t j = 1; j <= config.depth(); ++j) {
    const auto& spec = config.levels[j - 1];
    const auto& prev = st.levels[j - 1].points;
    if (j > 1) eligible.assign(prev.size(), 1);
    WindowStructure::Level lvl;
    lvl.centroids = farthest_event_sampling(prev, spec.T, eligible);
    lvl.group = ball_group(prev, lvl.centroids, spec.r, spec.K);
    lvl.relative = relative_transform(prev, lvl.group, lvl.centroids);
    lvl.points.reserve(lvl.centroids.size());
    for (auto c : lvl.centroids) lvl.points.push_back(prev[c]);
    st.levels.push_back(std::move(lvl));
  }
  for (std::size_t j = 0; j < config.depth(); ++j) {
    st.plans.push_back(idw_plan(st.levels[j].points, st.levels[j + 1].points));
  }
  return st;
}

template <class S>
Grid<S> grouped_input(const WindowStructure::Level& level, const Grid<S>& prev_features) {
  const std::size_t T = level.centroids.size();
  const std::size_t K = T == 0 ? 0 : level.group.size() / T;
  const std::size_t C = prev_features.C;
  Grid<S> out(T, K, 4 + C);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < K; ++k) {
      S* cell = out.cell(t, k);
      const double* rel = level.relative.data() + (t * K + k) * 4;
      for (int c = 0; c < 4; ++c) cell[c] = static_cast<S>(rel[c]);
      std::copy_n(prev_features.cell(level.group[t * K + k], 0), C, cell + 4);
    }
  }
  return out;
}

template <class S>
Grid<S> input_features(std::span<const NormalizedPoint> points, std::span<const std::uint8_t> bone) {
  Grid<S> f(points.size(), 1, kInputChannels);
  for (std::size_t i = 0; i < points.size(); ++i) {
    S* c = f.cell(i, 0);
    c[0] = static_cast<S>(points[i].nx);
    c[1] = static_cast<S>(points[i].ny);
    c[2] = static_cast<S>(points[i].nt);
    c[3] = static_cast<S>(points[i].p);
    c[4] = static_cast<S>(bone[i]);
  }
  return f;
}

template <class S>
LevelOutput<S> set_abstraction_level(std::span<const NormalizedPoint> points, const Grid<S>& features,
                                     const LevelSpec& level, std::span<const std::uint8_t> eligible,
                                     const SsfeParams<S>& params, const LcscHyperParams& hyper) {
  if (features.rows != points.size()) throw ShapeMismatch("one feature row per point");
  WindowStructure::Level lvl;
  lvl.centroids = farthest_event_sampling(points, level.T, eligible);
  lvl.group = ball_group(points, lvl.centroids, level.r, level.K);
  lvl.relative = relative_transform(points, lvl.group, lvl.centroids);
  LevelOutput<S> out;
  out.features = sum_pool(ssfe_forward(grouped_input(lvl, features), params, hyper));
  for (auto c : lvl.centroids) out.points.push_back(points[c]);
  out.centroids = std::move(lvl.centroids);
  return out;
}

template <class S>
Grid<S> feature_propagation_level(std::span<const NormalizedPoint> targets,
                                  std::span<const NormalizedPoint> sources,
                                  const Grid<S>& source_features, const Grid<S>& skip,
                                  const Conv1d<S>& decode) {
  if (sources.empty()) throw ShapeMismatch("propagation needs at least one source");
  const auto interp = interpolate(idw_plan(targets, sources), source_features);
  return sfe_forward(decode, concat_channels(interp, skip));
}

template <class S>
std::vector<S> wednet_forward(const WedNetParams<S>& params, const WindowStructure& st,
                              ForwardCache<S>* cache) {
  const std::size_t n = st.order.size();
  if (n == 0) return {};
  const auto& cfg = params.config;
  const std::size_t L = cfg.depth();
  if (st.levels.size() != L + 1) throw ShapeMismatch("structure depth differs from the network");

  ForwardCache<S> local;
  ForwardCache<S>& c = cache ? *cache : local;
  c.features.assign(L + 1, {});
  c.ssfe.assign(L + 1, {});
  c.fp_input.assign(L, {});
  c.fp_pre.assign(L, {});
  c.fp_out.assign(L, {});

  c.features[0] = input_features<S>(st.levels[0].points, st.bone);
  for (std::size_t j = 1; j <= L; ++j) {
    const auto s_tilde = grouped_input(st.levels[j], c.features[j - 1]);
    c.features[j] = sum_pool(ssfe_forward(s_tilde, params.sa[j - 1], cfg.hyper, &c.ssfe[j]));
  }
  for (std::size_t j = L; j-- > 0;) {
    const Grid<S>& upper = j + 1 == L ? c.features[L] : c.fp_out[j + 1];
    c.fp_input[j] = concat_channels(interpolate(st.plans[j], upper), c.features[j]);
    c.fp_pre[j] = conv_forward(params.fp[j], c.fp_input[j]);
    c.fp_out[j] = c.fp_pre[j];
    rectify(c.fp_out[j]);
  }
  const auto head = conv_forward(params.head, c.fp_out[0]);
  std::vector<S> logits(n);
  for (std::size_t i = 0; i < n; ++i) logits[st.order[i]] = head.v[i];
  return logits;
}

template <class S>
std::vector<S> wednet_forward(const WedNetParams<S>& params, const NetInput& input) {
  return wednet_forward(params, build_structure(input, params.config));
}

template <class S>
void wednet_backward(const WedNetParams<S>& params, const WindowStructure& st,
                     const ForwardCache<S>& c, std::span<const S> grad_logits,
                     WedNetParams<S>& grads) {
  const std::size_t n = st.order.size();
  if (n == 0) return;
  if (grad_logits.size() != n) throw ShapeMismatch("one logit gradient per event");
  const std::size_t L = params.config.depth();

  Grid<S> d_head(n, 1, 1);
  for (std::size_t i = 0; i < n; ++i) d_head.v[i] = grad_logits[st.order[i]];

  std::vector<Grid<S>> d_features(L + 1);
  for (std::size_t j = 1; j <= L; ++j) {
    d_features[j] = Grid<S>(c.features[j].rows, 1, c.features[j].C);
  }

  Grid<S> d_out = conv_backward(params.head, c.fp_out[0], d_head, grads.head);
  for (std::size_t j = 0; j < L; ++j) {
    for (std::size_t i = 0; i < d_out.v.size(); ++i) {
      if (!(c.fp_pre[j].v[i] > S(0))) d_out.v[i] = S(0);
    }
    const auto d_in = conv_backward(params.fp[j], c.fp_input[j], d_out, grads.fp[j]);
    const Grid<S>& upper = j + 1 == L ? c.features[L] : c.fp_out[j + 1];
    const std::size_t up_c = upper.C;
    Grid<S> d_upper(upper.rows, 1, up_c);
    const auto& plan = st.plans[j];
    for (std::size_t t = 0; t < plan.targets; ++t) {
      const S* g = d_in.cell(t, 0);
      for (int h = 0; h < 3; ++h) {
        const auto w = static_cast<S>(plan.weight[t][h]);
        if (w == S(0)) continue;
        S* dst = d_upper.cell(plan.source[t][h], 0);
        for (std::size_t d = 0; d < up_c; ++d) dst[d] += w * g[d];
      }
      if (j > 0) {
        S* skip = d_features[j].cell(t, 0);
        for (std::size_t d = 0; d < d_features[j].C; ++d) skip[d] += g[up_c + d];
      }
    }
    if (j + 1 == L) {
      for (std::size_t i = 0; i < d_upper.v.size(); ++i) d_features[L].v[i] += d_upper.v[i];
    } else {
      d_out = std::move(d_upper);
    }
  }

  for (std::size_t j = L; j >= 1; --j) {
    const auto& lvl = st.levels[j];
    const std::size_t T = lvl.centroids.size();
    const std::size_t K = lvl.group.size() / T;
    const std::size_t D = c.features[j].C;
    Grid<S> d_e(T, K, D);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t k = 0; k < K; ++k) std::copy_n(d_features[j].cell(t, 0), D, d_e.cell(t, k));
    }
    const auto d_s = ssfe_backward(params.sa[j - 1], c.ssfe[j], d_e, grads.sa[j - 1]);
    if (j > 1) {
      const std::size_t C = d_features[j - 1].C;
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t k = 0; k < K; ++k) {
          const S* g = d_s.cell(t, k) + 4;
          S* dst = d_features[j - 1].cell(lvl.group[t * K + k], 0);
          for (std::size_t d = 0; d < C; ++d) dst[d] += g[d];
        }
      }
    }
  }
}

template <class S>
double loss_bce(std::span<const S> logits, std::span<const Label> truth, LossWeighting weighting,
                std::vector<S>* grad) {
  if (logits.size() != truth.size()) throw ShapeMismatch("one label per logit");
  std::size_t n_real = 0;
  std::size_t n_noise = 0;
  for (auto l : truth) {
    n_real += l == Label::Real;
    n_noise += l == Label::Noise;
  }
  const std::size_t n = n_real + n_noise;
  if (grad) grad->assign(logits.size(), S(0));
  if (n == 0) return 0.0;
  double w_real = 1.0;
  double w_noise = 1.0;
  if (weighting == LossWeighting::Balanced) {
    const double classes = (n_real > 0) + (n_noise > 0);
    if (n_real) w_real = double(n) / (classes * double(n_real));
    if (n_noise) w_noise = double(n) / (classes * double(n_noise));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (truth[i] == Label::Unknown) continue;
    const double z = static_cast<double>(logits[i]);
    const double y = truth[i] == Label::Real ? 1.0 : 0.0;
    const double w = truth[i] == Label::Real ? w_real : w_noise;
    // max(z, 0) - z*y + log(1 + exp(-|z|))
    total += w * (std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))));
    if (grad) {
      const double sig = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      (*grad)[i] = static_cast<S>(w * (sig - y) / double(n));
    }
  }
  return total / double(n);
}

template <class S>
double loss_and_gradient(const WedNetParams<S>& params, const WindowStructure& structure,
                         std::span<const Label> truth, LossWeighting weighting,
                         WedNetParams<S>& grads) {
  ForwardCache<S> cache;
  const auto logits = wednet_forward(params, structure, &cache);
  std::vector<S> d_logits;
  const double loss = loss_bce<S>(logits, truth, weighting, &d_logits);
  wednet_backward<S>(params, structure, cache, d_logits, grads);
  return loss;
}

#define EVD_INSTANTIATE_WEDNET(S)                                                                  \
  template struct WedNetParams<S>;                                                                 \
  template void for_each_block(                                                                    \
      WedNetParams<S>&,                                                                            \
      const std::function<void(const std::string&, const std::vector<std::uint32_t>&, std::span<S>)>&); \
  template void for_each_block(const WedNetParams<S>&,                                             \
                               const std::function<void(const std::string&,                        \
                                                        const std::vector<std::uint32_t>&,          \
                                                        std::span<const S>)>&);                     \
  template WedNetParams<S> init_params(const NetConfig&, std::uint64_t);                           \
  template Grid<S> grouped_input(const WindowStructure::Level&, const Grid<S>&);                   \
  template LevelOutput<S> set_abstraction_level(std::span<const NormalizedPoint>, const Grid<S>&,  \
                                                const LevelSpec&, std::span<const std::uint8_t>,   \
                                                const SsfeParams<S>&, const LcscHyperParams&);     \
  template Grid<S> feature_propagation_level(std::span<const NormalizedPoint>,                     \
                                             std::span<const NormalizedPoint>, const Grid<S>&,     \
                                             const Grid<S>&, const Conv1d<S>&);                    \
  template std::vector<S> wednet_forward(const WedNetParams<S>&, const WindowStructure&,           \
                                         ForwardCache<S>*);                                        \
  template std::vector<S> wednet_forward(const WedNetParams<S>&, const NetInput&);                 \
  template void wednet_backward(const WedNetParams<S>&, const WindowStructure&,                    \
                                const ForwardCache<S>&, std::span<const S>, WedNetParams<S>&);     \
  template double loss_bce(std::span<const S>, std::span<const Label>, LossWeighting,              \
                           std::vector<S>*);                                                       \
  template double loss_and_gradient(const WedNetParams<S>&, const WindowStructure&,                \
                                    std::span<const Label>, LossWeighting, WedNetParams<S>&);

EVD_INSTANTIATE_WEDNET(float)
EVD_INSTANTIATE_WEDNET(double)

template WedNetParams<double> cast_params(const WedNetParams<float>&);
template WedNetParams<float> cast_params(const WedNetParams<double>&);
template WedNetParams<float> cast_params(const WedNetParams<float>&);
template WedNetParams<double> cast_params(const WedNetParams<double>&);

}  // namespace evd::nn
