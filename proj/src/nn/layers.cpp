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

#include "evd/nn/layers.hpp"

#include <cmath>
#include <string>

#include "evd/error.hpp"

namespace evd::nn {
namespace {

template <class S>
void check_conv(const Conv1d<S>& conv, const Grid<S>& in) {
  if (in.C != conv.c_in) {
    throw ShapeMismatch("conv expects " + std::to_string(conv.c_in) + " channels, got " +
                        std::to_string(in.C));
  }
  if (conv.width % 2 == 0 || conv.width > in.K) {
    throw ShapeMismatch("conv width " + std::to_string(conv.width) + " does not fit K=" +
                        std::to_string(in.K));
  }
}

}  // namespace

template <class S>
Grid<S> conv_forward(const Conv1d<S>& conv, const Grid<S>& in) {
  check_conv(conv, in);
  Grid<S> out(in.rows, in.K, conv.c_out);
  const auto half = static_cast<std::ptrdiff_t>(conv.width / 2);
  const auto K = static_cast<std::ptrdiff_t>(in.K);
  for (std::size_t r = 0; r < in.rows; ++r) {
    for (std::ptrdiff_t k = 0; k < K; ++k) {
      S* o = out.cell(r, k);
      if (conv.has_bias) {
        for (std::size_t c = 0; c < conv.c_out; ++c) o[c] = conv.bias[c];
      }
      for (std::size_t tap = 0; tap < conv.width; ++tap) {
        const std::ptrdiff_t src = k + static_cast<std::ptrdiff_t>(tap) - half;
        if (src < 0 || src >= K) continue;
        const S* x = in.cell(r, src);
        for (std::size_t i = 0; i < conv.c_in; ++i) {
          const S xi = x[i];
          if (xi == S(0)) continue;
          const S* wrow = conv.weight.data() + (tap * conv.c_in + i) * conv.c_out;
          for (std::size_t c = 0; c < conv.c_out; ++c) o[c] += xi * wrow[c];
        }
      }
    }
  }
  return out;
}

template <class S>
Grid<S> conv_backward(const Conv1d<S>& conv, const Grid<S>& in, const Grid<S>& grad_out,
                      Conv1d<S>& grad) {
  check_conv(conv, in);
  if (grad_out.rows != in.rows || grad_out.K != in.K || grad_out.C != conv.c_out) {
    throw ShapeMismatch("conv gradient shape");
  }
  Grid<S> grad_in(in.rows, in.K, in.C);
  const auto half = static_cast<std::ptrdiff_t>(conv.width / 2);
  const auto K = static_cast<std::ptrdiff_t>(in.K);
  for (std::size_t r = 0; r < in.rows; ++r) {
    for (std::ptrdiff_t k = 0; k < K; ++k) {
      const S* g = grad_out.cell(r, k);
      if (conv.has_bias) {
        for (std::size_t c = 0; c < conv.c_out; ++c) grad.bias[c] += g[c];
      }
      for (std::size_t tap = 0; tap < conv.width; ++tap) {
        const std::ptrdiff_t src = k + static_cast<std::ptrdiff_t>(tap) - half;
        if (src < 0 || src >= K) continue;
        const S* x = in.cell(r, src);
        S* gx = grad_in.cell(r, src);
        for (std::size_t i = 0; i < conv.c_in; ++i) {
          const std::size_t base = (tap * conv.c_in + i) * conv.c_out;
          const S* wrow = conv.weight.data() + base;
          S* gw = grad.weight.data() + base;
          const S xi = x[i];
          S acc = S(0);
          for (std::size_t c = 0; c < conv.c_out; ++c) {
            gw[c] += xi * g[c];
            acc += wrow[c] * g[c];
          }
          gx[i] += acc;
        }
      }
    }
  }
  return grad_in;
}

template <class S>
Grid<S> sfe_forward(const Conv1d<S>& conv, const Grid<S>& in) {
  auto out = conv_forward(conv, in);
  for (auto& v : out.v) v = v > S(0) ? v : S(0);
  return out;
}

template <class S>
S soft_threshold(S x, S lambda) {
  if (x > lambda) return x - lambda;
  if (x < -lambda) return x + lambda;
  return S(0);
}

template <class S>
Grid<S> soft_threshold(const Grid<S>& x, std::span<const S> lambda) {
  if (lambda.size() != x.C) throw ShapeMismatch("soft threshold channel count");
  Grid<S> out = x;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = soft_threshold(x.v[i], lambda[i % x.C]);
  return out;
}

template <class S>
Grid<S> sum_pool(const Grid<S>& x) {
  Grid<S> out(x.rows, 1, x.C);
  for (std::size_t r = 0; r < x.rows; ++r) {
    S* o = out.cell(r, 0);
    for (std::size_t k = 0; k < x.K; ++k) {
      const S* c = x.cell(r, k);
      for (std::size_t d = 0; d < x.C; ++d) o[d] += c[d];
    }
  }
  return out;
}

template <class S>
Grid<S> lcsc_block(const Grid<S>& e, const Grid<S>& ws, const Conv1d<S>& W, const Conv1d<S>& Q,
                   std::span<const S> lambda) {
  if (!e.same_shape(ws)) throw ShapeMismatch("LCSC iterate and W*S~ differ");
  const auto wqe = conv_forward(W, conv_forward(Q, e));
  Grid<S> z = e;
  for (std::size_t i = 0; i < z.v.size(); ++i) z.v[i] = e.v[i] - wqe.v[i] + ws.v[i];
  return soft_threshold(z, lambda);
}

template <class S>
Grid<S> ssfe_forward(const Grid<S>& s_tilde, const SsfeParams<S>& params,
                     const LcscHyperParams& hyper, SsfeCache<S>* cache) {
  if (hyper.iterations < 1) throw ShapeMismatch("SSFE needs at least one LCSC iteration");
  auto pre = conv_forward(params.init, s_tilde);
  Grid<S> e = pre;
  for (auto& v : e.v) v = v > S(0) ? v : S(0);
  const auto ws = conv_forward(params.W, s_tilde);
  if (!e.same_shape(ws)) throw ShapeMismatch("SSFE init and W produce different shapes");
  if (cache) {
    cache->input = s_tilde;
    cache->init_pre = std::move(pre);
    cache->iterates.assign(1, e);
    cache->qe.clear();
    cache->pre_soft.clear();
  }
  const std::span<const S> lambda(params.lambda);
  for (std::size_t it = 0; it < hyper.iterations; ++it) {
    auto qe = conv_forward(params.Q, e);
    const auto wqe = conv_forward(params.W, qe);
    Grid<S> z = e;
    for (std::size_t i = 0; i < z.v.size(); ++i) z.v[i] = e.v[i] - wqe.v[i] + ws.v[i];
    e = soft_threshold(z, lambda);
    if (cache) {
      cache->qe.push_back(std::move(qe));
      cache->pre_soft.push_back(std::move(z));
      cache->iterates.push_back(e);
    }
  }
  return e;
}

template <class S>
Grid<S> ssfe_backward(const SsfeParams<S>& params, const SsfeCache<S>& cache,
                      const Grid<S>& grad_out, SsfeParams<S>& grad) {
  Grid<S> de = grad_out;
  Grid<S> dws(de.rows, de.K, de.C);
  const std::size_t C = de.C;
  for (std::size_t it = cache.pre_soft.size(); it-- > 0;) {
    const auto& z = cache.pre_soft[it];
    Grid<S> dz(de.rows, de.K, C);
    for (std::size_t i = 0; i < z.v.size(); ++i) {
      const std::size_t c = i % C;
      const S lam = params.lambda[c];
      if (z.v[i] > lam) {
        dz.v[i] = de.v[i];
        grad.lambda[c] -= de.v[i];
      } else if (z.v[i] < -lam) {
        dz.v[i] = de.v[i];
        grad.lambda[c] += de.v[i];
      }
    }
    Grid<S> neg = dz;
    for (auto& v : neg.v) v = -v;
    for (std::size_t i = 0; i < dz.v.size(); ++i) dws.v[i] += dz.v[i];
    const auto dqe = conv_backward(params.W, cache.qe[it], neg, grad.W);
    const auto de_q = conv_backward(params.Q, cache.iterates[it], dqe, grad.Q);
    for (std::size_t i = 0; i < dz.v.size(); ++i) dz.v[i] += de_q.v[i];
    de = std::move(dz);
  }
  auto ds = conv_backward(params.W, cache.input, dws, grad.W);
  for (std::size_t i = 0; i < de.v.size(); ++i) {
    if (!(cache.init_pre.v[i] > S(0))) de.v[i] = S(0);
  }
  const auto ds_init = conv_backward(params.init, cache.input, de, grad.init);
  for (std::size_t i = 0; i < ds.v.size(); ++i) ds.v[i] += ds_init.v[i];
  return ds;
}

#define EVD_INSTANTIATE_LAYERS(S)                                                              \
  template Grid<S> conv_forward(const Conv1d<S>&, const Grid<S>&);                            \
  template Grid<S> conv_backward(const Conv1d<S>&, const Grid<S>&, const Grid<S>&, Conv1d<S>&); \
  template Grid<S> sfe_forward(const Conv1d<S>&, const Grid<S>&);                             \
  template S soft_threshold(S, S);                                                            \
  template Grid<S> soft_threshold(const Grid<S>&, std::span<const S>);                        \
  template Grid<S> sum_pool(const Grid<S>&);                                                  \
  template Grid<S> lcsc_block(const Grid<S>&, const Grid<S>&, const Conv1d<S>&,               \
                              const Conv1d<S>&, std::span<const S>);                          \
  template Grid<S> ssfe_forward(const Grid<S>&, const SsfeParams<S>&, const LcscHyperParams&, \
                                SsfeCache<S>*);                                               \
  template Grid<S> ssfe_backward(const SsfeParams<S>&, const SsfeCache<S>&, const Grid<S>&,   \
                                 SsfeParams<S>&);

EVD_INSTANTIATE_LAYERS(float)
EVD_INSTANTIATE_LAYERS(double)

}  // namespace evd::nn
