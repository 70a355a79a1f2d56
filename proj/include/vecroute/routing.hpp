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

#ifndef VECROUTE_ROUTING_HPP_
#define VECROUTE_ROUTING_HPP_

// Types shared by the reference and optimized routers.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vecroute/tensor.hpp"

namespace vecroute {

/// Index bounds of one routing. An empty n_inp means variable-length input:
/// the number of input vectors is taken from each input sequence.
struct RoutingDims {
  std::optional<std::size_t> n_inp;
  std::size_t n_out = 1;
  std::size_t d_inp = 1;
  std::size_t d_out = 1;
  std::size_t n_iters = 2;

  bool variable_length() const { return !n_inp.has_value(); }

  void validate() const {
    if (n_inp && *n_inp == 0) throw DimensionError("n_inp must be positive");
    if (n_out == 0 || d_inp == 0 || d_out == 0) {
      throw DimensionError("n_out, d_inp and d_out must be positive");
    }
    if (n_iters < 2) {
      throw DimensionError("n_iters must be at least 2, got " + std::to_string(n_iters));
    }
  }

  /// Checks an input sequence against the bounds and returns its length.
  template <typename T>
  std::size_t input_count(const DenseTensor<T>& x_inp) const {
    if (x_inp.rank() != 2 || x_inp.extent(1) != d_inp) {
      throw DimensionError("input sequence must be n_inp x " + std::to_string(d_inp) + ", got " +
                           shape_string(x_inp.shape()));
    }
    if (n_inp && x_inp.extent(0) != *n_inp) {
      throw DimensionError("input sequence has " + std::to_string(x_inp.extent(0)) +
                           " vectors, routing expects n_inp = " + std::to_string(*n_inp));
    }
    return x_inp.extent(0);
  }

  friend bool operator==(const RoutingDims&, const RoutingDims&) = default;
};

/// Output of the activation network: one score per input vector, or the
/// always-on marker under which every gate f(a_i) is exactly 1.
template <typename T>
struct ActivationScores {
  DenseTensor<T> scores;  // n_inp; empty when always_on
  bool always_on = false;

  static ActivationScores on() { return {DenseTensor<T>{}, true}; }

  /// f(a_i) per input vector.
  DenseTensor<T> gates(std::size_t n_inp) const {
    if (always_on) return DenseTensor<T>({n_inp}, T(1));
    require_shape(scores, {n_inp}, "activation scores");
    DenseTensor<T> out({n_inp});
    for (std::size_t i = 0; i < n_inp; ++i) out(i) = logistic(scores(i));
    return out;
  }
};

/// Net benefit per unit of data used and net cost per unit ignored, per
/// (input, output) pair. Values may have either sign.
template <typename T>
struct BetaPair {
  DenseTensor<T> beta_use;  // n_inp x n_out
  DenseTensor<T> beta_ign;  // n_inp x n_out

  void validate(std::size_t n_inp, std::size_t n_out) const {
    require_shape(beta_use, {n_inp, n_out}, "beta_use");
    require_shape(beta_ign, {n_inp, n_out}, "beta_ign");
    check_finite(beta_use, "beta_use");
    check_finite(beta_ign, "beta_ign");
  }

  static BetaPair constant(std::size_t n_inp, std::size_t n_out, T use, T ign) {
    return {DenseTensor<T>({n_inp, n_out}, use), DenseTensor<T>({n_inp, n_out}, ign)};
  }
};

/// State of one routing iteration. `scores` and `predicted_inputs` are absent
/// in the first iteration, which uses the flat prior.
template <typename T>
struct IterationRecord {
  DenseTensor<T> routing;           // R, n_inp x n_out
  std::optional<DenseTensor<T>> scores;            // S, n_inp x n_out
  std::optional<DenseTensor<T>> predicted_inputs;  // x_hat, n_out x d_inp
  DenseTensor<T> d_use;             // n_inp x n_out
  DenseTensor<T> d_ign;             // n_inp x n_out
  DenseTensor<T> phi;               // n_inp x n_out
  DenseTensor<T> x_out;             // n_out x d_out
};

template <typename T>
struct RoutingTrace {
  ActivationScores<T> activations;
  DenseTensor<T> gates;  // f(a_i)
  std::vector<IterationRecord<T>> iterations;
};

template <typename T>
struct RouteResult {
  DenseTensor<T> x_out;
  DenseTensor<T> phi;  // final iteration's coefficients
  std::optional<RoutingTrace<T>> trace;
};

/// phi_ij = beta_use_ij * D_use_ij - beta_ign_ij * D_ign_ij.
template <typename T>
DenseTensor<T> bang_per_bit(const DenseTensor<T>& d_use, const DenseTensor<T>& d_ign,
                            const BetaPair<T>& betas) {
  DenseTensor<T> phi(d_use.shape());
  for (std::size_t k = 0; k < phi.size(); ++k) {
    phi.data()[k] = betas.beta_use.data()[k] * d_use.data()[k] -
                    betas.beta_ign.data()[k] * d_ign.data()[k];
  }
  return phi;
}

namespace detail {

template <typename T>
void check_step(const DenseTensor<T>& t, const char* step, std::size_t iteration) {
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite values in ") + step + " at iteration " +
                       std::to_string(iteration + 1));
  }
}

}  // namespace detail

}  // namespace vecroute

#endif  // VECROUTE_ROUTING_HPP_
