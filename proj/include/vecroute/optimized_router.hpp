/*
 * Copyright 2026 The vecroute Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VECROUTE_OPTIMIZED_ROUTER_HPP_
#define VECROUTE_OPTIMIZED_ROUTER_HPP_

// Memory-efficient routing. Votes are never stored: each iteration contracts
// the credit coefficients phi with the input vectors first,
//
//   P_jd   = sum_i phi_ij x_id                       (n_out x d_inp)
//   x_out  = (sum_d W_F2_dh W_F1_jd P_jd) / sqrt(n) + B_F2_jh sum_i phi_ij
//
// and only then applies the output-side linear map. With trace capture off,
// transient storage is bounded by kTransientFactor * (n d_inp + n_out (d_inp
// + d_out) + n n_out) elements; no tensor of n_inp x n_out x d extent is
// ever allocated.

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>

#include "vecroute/params.hpp"
#include "vecroute/routing.hpp"
#include "vecroute/tensor.hpp"

namespace vecroute {

struct RouteOptions {
  bool capture_trace = false;
  // Replace the activation network with the always-on marker (f(a) == 1).
  bool always_on_activations = false;
};

inline constexpr std::size_t kTransientFactor = 8;

/// Upper bound on transient tensor elements of one untraced forward pass.
inline std::size_t transient_bound_elements(std::size_t n_inp, const RoutingDims& dims) {
  return kTransientFactor * (n_inp * dims.d_inp + dims.n_out * (dims.d_inp + dims.d_out) +
                             n_inp * dims.n_out);
}

/// a_i = (sum_d W_A_id x_id) / sqrt(n_inp) + B_A_i.
template <typename T>
DenseTensor<T> activations(const DenseTensor<T>& x_inp, const RoutingParams<T>& params) {
  const std::size_t n = x_inp.extent(0), di = x_inp.extent(1);
  const bool fixed = params.mode() == Mode::fixed;
  if (fixed) {
    require_shape(params.w_a, {n, di}, "W_A");
    require_shape(params.b_a, {n}, "B_A");
  } else {
    require_shape(params.w_a, {di}, "W_A");
    require_shape(params.b_a, {1}, "B_A");
  }
  const T inv_sqrt_n = T(1) / std::sqrt(T(n));
  DenseTensor<T> a({n});
  for (std::size_t i = 0; i < n; ++i) {
    const T* w = fixed ? params.w_a.row(i) : params.w_a.data();
    const T* x = x_inp.row(i);
    T acc = T(0);
    for (std::size_t d = 0; d < di; ++d) acc += w[d] * x[d];
    a(i) = acc * inv_sqrt_n + (fixed ? params.b_a(i) : params.b_a(0));
  }
  return a;
}

/// Fixed mode: the stored betas. Variable mode:
/// beta_ij = sum_d x_id W_dj + B_j for both use and ignore.
template <typename T>
BetaPair<T> betas(const DenseTensor<T>& x_inp, const RoutingParams<T>& params) {
  if (params.fixed_betas) {
    if (params.fixed_betas->beta_use.extent(0) != x_inp.extent(0)) {
      throw DimensionError("fixed betas hold " +
                           std::to_string(params.fixed_betas->beta_use.extent(0)) +
                           " inputs, got " + std::to_string(x_inp.extent(0)));
    }
    return {params.fixed_betas->beta_use, params.fixed_betas->beta_ign};
  }
  if (!params.beta_generators) throw DimensionError("parameters hold no betas");
  const auto& gen = *params.beta_generators;
  const std::size_t n = x_inp.extent(0), di = x_inp.extent(1), m = gen.b_use.extent(0);
  require_shape(gen.w_use, {di, m}, "W_use");
  require_shape(gen.w_ign, {di, m}, "W_ign");
  BetaPair<T> out{DenseTensor<T>({n, m}), DenseTensor<T>({n, m})};
  for (std::size_t i = 0; i < n; ++i) {
    const T* x = x_inp.row(i);
    T* bu = out.beta_use.row(i);
    T* bi = out.beta_ign.row(i);
    for (std::size_t d = 0; d < di; ++d) {
      const T* wu = gen.w_use.row(d);
      const T* wi = gen.w_ign.row(d);
      for (std::size_t j = 0; j < m; ++j) {
        bu[j] += x[d] * wu[j];
        bi[j] += x[d] * wi[j];
      }
    }
    for (std::size_t j = 0; j < m; ++j) {
      bu[j] += gen.b_use(j);
      bi[j] += gen.b_ign(j);
    }
  }
  return out;
}

/// x_hat_jd = W_G2_jd * sum_h W_G1_hd N(x_out)_jh + B_G2_jd, where N
/// normalizes each output vector to zero mean and unit variance.
template <typename T>
DenseTensor<T> predict_inputs(const DenseTensor<T>& x_out, const RoutingParams<T>& params) {
  const std::size_t m = params.w_g2.extent(0), di = params.w_g2.extent(1);
  const std::size_t dout = params.w_g1.extent(0);
  require_shape(x_out, {m, dout}, "output vectors");
  const DenseTensor<T> z = normalize_vectors(x_out);
  DenseTensor<T> x_hat({m, di});
  for (std::size_t j = 0; j < m; ++j) {
    T* out = x_hat.row(j);
    const T* zj = z.row(j);
    for (std::size_t h = 0; h < dout; ++h) {
      const T* w = params.w_g1.row(h);
      const T zh = zj[h];
      for (std::size_t d = 0; d < di; ++d) out[d] += w[d] * zh;
    }
    const T* w2 = params.w_g2.row(j);
    const T* b2 = params.b_g2.row(j);
    for (std::size_t d = 0; d < di; ++d) out[d] = w2[d] * out[d] + b2[d];
  }
  return x_hat;
}

/// S_ij = log f(W_S_ij * <x_i, x_hat_j> + B_S_ij); always <= 0.
template <typename T>
DenseTensor<T> score_predictions(const DenseTensor<T>& x_inp, const DenseTensor<T>& x_hat,
                                 const RoutingParams<T>& params) {
  const std::size_t n = x_inp.extent(0), di = x_inp.extent(1), m = x_hat.extent(0);
  require_shape(x_hat, {m, di}, "predicted inputs");
  const bool fixed = params.mode() == Mode::fixed;
  if (fixed) {
    require_shape(params.w_s, {n, m}, "W_S");
    require_shape(params.b_s, {n, m}, "B_S");
  } else {
    require_shape(params.w_s, {m}, "W_S");
    require_shape(params.b_s, {m}, "B_S");
  }
  DenseTensor<T> s({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    const T* x = x_inp.row(i);
    T* si = s.row(i);
    const T* ws = fixed ? params.w_s.row(i) : params.w_s.data();
    const T* bs = fixed ? params.b_s.row(i) : params.b_s.data();
    for (std::size_t j = 0; j < m; ++j) {
      const T* xh = x_hat.row(j);
      T dot = T(0);
      for (std::size_t d = 0; d < di; ++d) dot += x[d] * xh[d];
      si[j] = log_logistic(ws[j] * dot + bs[j]);
    }
  }
  return s;
}

/// sum_i phi_ij V_ijh without forming V: contracts over i first and applies
/// W_F2 once per output vector afterwards.
template <typename T>
DenseTensor<T> m_step_factored(const DenseTensor<T>& x_inp, const DenseTensor<T>& phi,
                               const RoutingParams<T>& params) {
  const std::size_t n = x_inp.extent(0), di = x_inp.extent(1);
  const std::size_t m = params.w_f1.extent(0), dout = params.w_f2.extent(1);
  require_shape(phi, {n, m}, "phi");
  require_shape(params.w_f1, {m, di}, "W_F1");
  require_shape(params.w_f2, {di, dout}, "W_F2");
  require_shape(params.b_f2, {m, dout}, "B_F2");

  DenseTensor<T> mixed({m, di});  // sum_i phi_ij x_id, then scaled by W_F1
  DenseTensor<T> phi_sum({m});
  for (std::size_t i = 0; i < n; ++i) {
    const T* x = x_inp.row(i);
    const T* p = phi.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      const T c = p[j];
      phi_sum(j) += c;
      T* row = mixed.row(j);
      for (std::size_t d = 0; d < di; ++d) row[d] += c * x[d];
    }
  }
  const T inv_sqrt_n = T(1) / std::sqrt(T(n));
  DenseTensor<T> x_out({m, dout});
  for (std::size_t j = 0; j < m; ++j) {
    const T* w1 = params.w_f1.row(j);
    const T* q = mixed.row(j);
    T* out = x_out.row(j);
    for (std::size_t d = 0; d < di; ++d) {
      const T qd = w1[d] * q[d];
      const T* w2 = params.w_f2.row(d);
      for (std::size_t h = 0; h < dout; ++h) out[h] += w2[h] * qd;
    }
    const T* b = params.b_f2.row(j);
    for (std::size_t h = 0; h < dout; ++h) out[h] = out[h] * inv_sqrt_n + phi_sum(j) * b[h];
  }
  return x_out;
}

/// Votes of input vector i for every output (n_out x d_out), evaluated in
/// isolation from all other inputs. The 1/sqrt(n) factor uses the length of
/// the whole sequence.
template <typename T>
DenseTensor<T> input_votes(const DenseTensor<T>& x_inp, std::size_t i,
                           const RoutingParams<T>& params) {
  const std::size_t n = x_inp.extent(0), di = x_inp.extent(1);
  const std::size_t m = params.w_f1.extent(0), dout = params.w_f2.extent(1);
  if (i >= n) throw DimensionError("input index out of range");
  const T inv_sqrt_n = T(1) / std::sqrt(T(n));
  const T* x = x_inp.row(i);
  DenseTensor<T> v({m, dout});
  for (std::size_t j = 0; j < m; ++j) {
    T* out = v.row(j);
    for (std::size_t d = 0; d < di; ++d) {
      const T s = x[d] * params.w_f1(j, d) * inv_sqrt_n;
      const T* w2 = params.w_f2.row(d);
      for (std::size_t h = 0; h < dout; ++h) out[h] += w2[h] * s;
    }
    for (std::size_t h = 0; h < dout; ++h) out[h] += params.b_f2(j, h);
  }
  return v;
}

/// Full forward pass with lazily evaluated votes.
template <typename T>
RouteResult<T> route_optimized(const DenseTensor<T>& x_inp, const RoutingParams<T>& params,
                               const RoutingDims& dims, const RouteOptions& options = {}) {
  validate_params(params, dims);
  check_finite(x_inp, "input sequence");
  const std::size_t n = dims.input_count(x_inp);
  const std::size_t m = dims.n_out;

  ActivationScores<T> activation;
  if (options.always_on_activations) {
    activation = ActivationScores<T>::on();
  } else {
    activation.scores = activations(x_inp, params);
    detail::check_step(activation.scores, "activation scores", 0);
  }
  const DenseTensor<T> gates = activation.gates(n);

  // Fixed-mode betas are read in place; variable-mode betas are generated
  // once per forward pass.
  std::optional<BetaPair<T>> generated;
  if (params.beta_generators) {
    generated = betas(x_inp, params);
    detail::check_step(generated->beta_use, "beta_use", 0);
    detail::check_step(generated->beta_ign, "beta_ign", 0);
  }
  const DenseTensor<T>& beta_use = generated ? generated->beta_use : params.fixed_betas->beta_use;
  const DenseTensor<T>& beta_ign = generated ? generated->beta_ign : params.fixed_betas->beta_ign;

  RouteResult<T> result;
  if (options.capture_trace) result.trace = RoutingTrace<T>{activation, gates, {}};

  DenseTensor<T> x_out;
  for (std::size_t t = 0; t < dims.n_iters; ++t) {
    IterationRecord<T> rec;
    if (t == 0) {
      rec.routing = DenseTensor<T>({n, m}, T(1) / T(m));
    } else {
      DenseTensor<T> x_hat = predict_inputs(x_out, params);
      detail::check_step(x_hat, "predicted inputs", t);
      DenseTensor<T> s = score_predictions(x_inp, x_hat, params);
      detail::check_step(s, "prediction scores", t);
      rec.routing = softmax_rows(s);
      if (options.capture_trace) {
        rec.scores = std::move(s);
        rec.predicted_inputs = std::move(x_hat);
      }
    }
    detail::check_step(rec.routing, "routing probabilities", t);

    rec.d_use = DenseTensor<T>({n, m});
    rec.d_ign = DenseTensor<T>({n, m});
    rec.phi = DenseTensor<T>({n, m});
    for (std::size_t i = 0; i < n; ++i) {
      const T g = gates(i);
      const T* r = rec.routing.row(i);
      T* du = rec.d_use.row(i);
      T* dg = rec.d_ign.row(i);
      T* ph = rec.phi.row(i);
      const T* bu = beta_use.row(i);
      const T* bi = beta_ign.row(i);
      for (std::size_t j = 0; j < m; ++j) {
        du[j] = g * r[j];
        dg[j] = g - du[j];
        ph[j] = bu[j] * du[j] - bi[j] * dg[j];
      }
    }
    detail::check_step(rec.phi, "credit coefficients", t);

    x_out = m_step_factored(x_inp, rec.phi, params);
    detail::check_step(x_out, "output vectors", t);

    if (options.capture_trace) {
      rec.x_out = x_out;
      if (t + 1 == dims.n_iters) result.phi = rec.phi;
      result.trace->iterations.push_back(std::move(rec));
    } else if (t + 1 == dims.n_iters) {
      result.phi = std::move(rec.phi);
    }
  }
  result.x_out = std::move(x_out);
  return result;
}

}  // namespace vecroute

#endif  // VECROUTE_OPTIMIZED_ROUTER_HPP_
