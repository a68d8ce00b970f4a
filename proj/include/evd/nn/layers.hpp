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

#include <cstddef>
#include <span>
#include <vector>

namespace evd::nn {

/// Dense rows x K x C block, row-major with channels innermost. Pooled
/// (T x D) features use K = 1.
template <class S>
struct Grid {
  std::size_t rows = 0;
  std::size_t K = 1;
  std::size_t C = 0;
  std::vector<S> v;

  Grid() = default;
  Grid(std::size_t r, std::size_t k, std::size_t c) : rows(r), K(k), C(c), v(r * k * c, S(0)) {}

  S* cell(std::size_t r, std::size_t k) { return v.data() + (r * K + k) * C; }
  const S* cell(std::size_t r, std::size_t k) const { return v.data() + (r * K + k) * C; }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Grid& o) const { return rows == o.rows && K == o.K && C == o.C; }
};

/// 1-D convolution along the neighbour (K) axis with zero 'same' padding,
/// applied independently to every row. Weights are stored [tap][c_in][c_out].
template <class S>
struct Conv1d {
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t width = 1;  // odd
  bool has_bias = true;
  std::vector<S> weight;
  std::vector<S> bias;

  Conv1d() = default;
  Conv1d(std::size_t in, std::size_t out, std::size_t w, bool with_bias)
      : c_in(in), c_out(out), width(w), has_bias(with_bias), weight(w * in * out, S(0)),
        bias(with_bias ? out : 0, S(0)) {}

  S& w(std::size_t tap, std::size_t i, std::size_t o) { return weight[(tap * c_in + i) * c_out + o]; }
  S w(std::size_t tap, std::size_t i, std::size_t o) const { return weight[(tap * c_in + i) * c_out + o]; }
};

/// Linear part of an SFE layer. Throws ShapeMismatch.
template <class S>
Grid<S> conv_forward(const Conv1d<S>& conv, const Grid<S>& in);

/// Accumulates parameter gradients into `grad` and returns d(loss)/d(in).
template <class S>
Grid<S> conv_backward(const Conv1d<S>& conv, const Grid<S>& in, const Grid<S>& grad_out,
                      Conv1d<S>& grad);

/// SFE layer: convolution followed by a rectifier.
template <class S>
Grid<S> sfe_forward(const Conv1d<S>& conv, const Grid<S>& in);

template <class S>
S soft_threshold(S x, S lambda);

/// Per-channel soft threshold over the last axis.
template <class S>
Grid<S> soft_threshold(const Grid<S>& x, std::span<const S> lambda);

/// Sum over the K axis: rows x K x C -> rows x 1 x C.
template <class S>
Grid<S> sum_pool(const Grid<S>& x);

/// Parameters of one soft spatial feature embedding (SSFE) module.
template <class S>
struct SsfeParams {
  Conv1d<S> init;  // S~ -> E_0, rectified
  Conv1d<S> W;     // signal space -> code space
  Conv1d<S> Q;     // code space -> signal space
  std::vector<S> lambda;  // soft-threshold level per code channel, >= 0
};

/// Iteration count and the sparse-coding prior behind the soft threshold.
/// sigma_n, beta and gamma_shape document the derivation only: the threshold
/// itself is learned per channel.
struct LcscHyperParams {
  std::size_t iterations = 1;
  double sigma_n = 1.0;
  double beta = 1.0;
  double gamma_shape = 1.0;
  double p_exponent = 1.0;

  double prior_lambda() const { return sigma_n * sigma_n / beta; }
};

/// E_{j+1} = Soft_lambda(E_j - W(Q(E_j)) + W(S~)). `ws` is W(S~), which is
/// shared by every iteration.
template <class S>
Grid<S> lcsc_block(const Grid<S>& e, const Grid<S>& ws, const Conv1d<S>& W, const Conv1d<S>& Q,
                   std::span<const S> lambda);

template <class S>
struct SsfeCache {
  Grid<S> input;
  Grid<S> init_pre;                // init(S~) before the rectifier
  std::vector<Grid<S>> iterates;   // E_0 .. E_n
  std::vector<Grid<S>> qe;         // Q(E_j)
  std::vector<Grid<S>> pre_soft;   // argument of Soft at iteration j
};

/// Returns the final iterate (rows x K x D), before pooling.
template <class S>
Grid<S> ssfe_forward(const Grid<S>& s_tilde, const SsfeParams<S>& params,
                     const LcscHyperParams& hyper, SsfeCache<S>* cache = nullptr);

/// Backward through ssfe_forward given d(loss)/d(final iterate).
template <class S>
Grid<S> ssfe_backward(const SsfeParams<S>& params, const SsfeCache<S>& cache,
                      const Grid<S>& grad_out, SsfeParams<S>& grad);

}  // namespace evd::nn
