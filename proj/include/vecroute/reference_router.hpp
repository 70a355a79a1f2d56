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

#ifndef VECROUTE_REFERENCE_ROUTER_HPP_
#define VECROUTE_REFERENCE_ROUTER_HPP_

// Unoptimized routing with pluggable activation, vote, prediction and
// scoring networks. The full vote tensor V (n_inp x n_out x d_out) is
// materialized once before the loop, which makes this router the oracle for
// the optimized one and unsuitable for long sequences.

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "vecroute/routing.hpp"
#include "vecroute/tensor.hpp"

namespace vecroute {

template <typename T>
struct PluggableNetworks {
  // x_inp (n_inp x d_inp) -> activation scores (n_inp) or always-on.
  std::function<ActivationScores<T>(const DenseTensor<T>&)> activation;
  // x_inp -> votes V (n_inp x n_out x d_out). Should give distinct votes per
  // output for generic input, otherwise routing has nothing to choose.
  std::function<DenseTensor<T>(const DenseTensor<T>&)> votes;
  // x_out (n_out x d_out) -> predicted inputs x_hat (n_out x d_inp).
  std::function<DenseTensor<T>(const DenseTensor<T>&)> predict;
  // (x_inp, x_hat) -> prediction scores S (n_inp x n_out).
  std::function<DenseTensor<T>(const DenseTensor<T>&, const DenseTensor<T>&)> score;
};

/// x_out_jh = sum_i phi_ij V_ijh.
template <typename T>
DenseTensor<T> combine_votes(const DenseTensor<T>& phi, const DenseTensor<T>& votes) {
  return contract(phi, "ij", votes, "ijh", "i");
}

/// Runs exactly dims.n_iters iterations of E-, D- and M-steps.
template <typename T>
RouteResult<T> route_reference(const DenseTensor<T>& x_inp, const PluggableNetworks<T>& nets,
                               const BetaPair<T>& betas, const RoutingDims& dims,
                               bool capture_trace = false) {
  dims.validate();
  check_finite(x_inp, "input sequence");
  const std::size_t n = dims.input_count(x_inp);
  const std::size_t m = dims.n_out;
  betas.validate(n, m);

  ActivationScores<T> activation = nets.activation(x_inp);
  if (!activation.always_on) detail::check_step(activation.scores, "activation scores", 0);
  const DenseTensor<T> gates = activation.gates(n);

  const DenseTensor<T> votes = nets.votes(x_inp);
  require_shape(votes, {n, m, dims.d_out}, "votes");
  detail::check_step(votes, "votes", 0);

  const auto mul = [](T a, T b) { return a * b; };
  const auto sub = [](T a, T b) { return a - b; };

  RouteResult<T> result;
  if (capture_trace) result.trace = RoutingTrace<T>{activation, gates, {}};

  DenseTensor<T> x_out;
  for (std::size_t t = 0; t < dims.n_iters; ++t) {
    IterationRecord<T> rec;
    // E-step
    if (t == 0) {
      rec.routing = DenseTensor<T>({n, m}, T(1) / T(m));
    } else {
      DenseTensor<T> x_hat = nets.predict(x_out);
      require_shape(x_hat, {m, dims.d_inp}, "predicted inputs");
      detail::check_step(x_hat, "predicted inputs", t);
      DenseTensor<T> s = nets.score(x_inp, x_hat);
      require_shape(s, {n, m}, "prediction scores");
      detail::check_step(s, "prediction scores", t);
      rec.routing = softmax_rows(s);
      rec.predicted_inputs = std::move(x_hat);
      rec.scores = std::move(s);
    }
    detail::check_step(rec.routing, "routing probabilities", t);

    // D-step
    rec.d_use = broadcast(gates, "i", rec.routing, "ij", mul);
    rec.d_ign = broadcast(gates, "i", rec.d_use, "ij", sub);

    // M-step: net benefit of used data less net cost of ignored data.
    const DenseTensor<T> use_weights = broadcast(betas.beta_use, "ij", rec.d_use, "ij", mul);
    const DenseTensor<T> ign_weights = broadcast(betas.beta_ign, "ij", rec.d_ign, "ij", mul);
    x_out = broadcast(contract(use_weights, "ij", votes, "ijh", "i"), "jh",
                      contract(ign_weights, "ij", votes, "ijh", "i"), "jh", sub);
    detail::check_step(x_out, "output vectors", t);

    rec.phi = bang_per_bit(rec.d_use, rec.d_ign, betas);
    rec.x_out = x_out;
    if (t + 1 == dims.n_iters) result.phi = rec.phi;
    if (capture_trace) result.trace->iterations.push_back(std::move(rec));
  }
  result.x_out = std::move(x_out);
  return result;
}

/// Credit coefficients of one recorded iteration.
template <typename T>
DenseTensor<T> phi_of(const IterationRecord<T>& iteration, const BetaPair<T>& betas) {
  return bang_per_bit(iteration.d_use, iteration.d_ign, betas);
}

/// Vote network that ignores its input and returns learned memories W_mem.
template <typename T>
std::function<DenseTensor<T>(const DenseTensor<T>&)> memory_votes_plugin(DenseTensor<T> w_mem,
                                                                         const RoutingDims& dims) {
  if (!dims.n_inp) throw DimensionError("memory votes need a fixed n_inp");
  require_shape(w_mem, {*dims.n_inp, dims.n_out, dims.d_out}, "W_mem");
  check_finite(w_mem, "W_mem");
  return [w_mem = std::move(w_mem)](const DenseTensor<T>& x_inp) {
    if (x_inp.rank() != 2 || x_inp.extent(0) != w_mem.extent(0)) {
      throw DimensionError("memory votes hold " + std::to_string(w_mem.extent(0)) +
                           " input slots, got input of shape " + shape_string(x_inp.shape()));
    }
    return w_mem;
  };
}

/// Activation network that never gates: f(a_i) == 1 for every input.
template <typename T>
std::function<ActivationScores<T>(const DenseTensor<T>&)> always_on_activation_plugin() {
  return [](const DenseTensor<T>&) { return ActivationScores<T>::on(); };
}

struct HopfieldReport {
  bool always_on = false;
  double max_bias = 0.0;             // max |B_ijh|, zero iff no net cost to ignore
  double max_value_scaling = 0.0;    // max |M_ijh - V_ijh|
  double factorization_deviation = 0.0;  // routed update vs sum_i (R M - B)
  double attention_deviation = 0.0;      // routed update vs sum_i R V
  bool reduces = false;
};

inline constexpr double kHopfieldTolerance = 1e-5;

/// Compares every iteration's routed update against the memory-value /
/// memory-bias form U_jh = sum_i (R_ij M_ijh - B_ijh), with
/// M = (beta_use + beta_ign) f(a) V and B = beta_ign f(a) V, and against the
/// plain softmax mixture sum_i R_ij V_ijh. The routing reduces to attention
/// when activations are always on, B vanishes, M equals V and the mixture
/// matches within kHopfieldTolerance (relative L-infinity).
template <typename T>
HopfieldReport hopfield_reduction_check(const DenseTensor<T>& x_inp,
                                        const PluggableNetworks<T>& nets,
                                        const BetaPair<T>& betas, const RoutingDims& dims) {
  const RouteResult<T> routed = route_reference(x_inp, nets, betas, dims, true);
  const RoutingTrace<T>& trace = *routed.trace;
  const DenseTensor<T> votes = nets.votes(x_inp);
  const std::size_t n = x_inp.extent(0), m = dims.n_out, h_dim = dims.d_out;

  HopfieldReport report;
  report.always_on = trace.activations.always_on;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = double(trace.gates(i));
    for (std::size_t j = 0; j < m; ++j) {
      const double bu = double(betas.beta_use(i, j)), bi = double(betas.beta_ign(i, j));
      for (std::size_t h = 0; h < h_dim; ++h) {
        const double v = double(votes(i, j, h));
        report.max_bias = std::max(report.max_bias, std::abs(bi * g * v));
        report.max_value_scaling =
            std::max(report.max_value_scaling, std::abs((bu + bi) * g * v - v));
      }
    }
  }

  for (const auto& rec : trace.iterations) {
    DenseTensor<T> factored({m, h_dim});
    DenseTensor<T> mixture({m, h_dim});
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t h = 0; h < h_dim; ++h) {
        double u = 0.0, mix = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double g = double(trace.gates(i)), r = double(rec.routing(i, j));
          const double v = double(votes(i, j, h));
          const double bu = double(betas.beta_use(i, j)), bi = double(betas.beta_ign(i, j));
          u += r * (bu + bi) * g * v - bi * g * v;
          mix += r * v;
        }
        factored(j, h) = T(u);
        mixture(j, h) = T(mix);
      }
    }
    report.factorization_deviation =
        std::max(report.factorization_deviation, relative_linf(rec.x_out, factored));
    report.attention_deviation =
        std::max(report.attention_deviation, relative_linf(rec.x_out, mixture));
  }
  report.reduces = report.always_on && report.max_bias == 0.0 &&
                   report.max_value_scaling == 0.0 &&
                   report.attention_deviation <= kHopfieldTolerance;
  return report;
}

}  // namespace vecroute

#endif  // VECROUTE_REFERENCE_ROUTER_HPP_
