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

#ifndef VECROUTE_CONCRETE_NETWORKS_HPP_
#define VECROUTE_CONCRETE_NETWORKS_HPP_

// The optimized router's activation, vote, prediction and scoring networks
// expressed as plugins for the reference router. They are written with the
// generic labeled contractions and materialize the vote tensor, so they share
// no arithmetic with the hand-fused loops of the optimized router.

#include <cmath>
#include <memory>

#include "vecroute/params.hpp"
#include "vecroute/reference_router.hpp"
#include "vecroute/tensor.hpp"

namespace vecroute {

template <typename T>
PluggableNetworks<T> concrete_networks(const RoutingParams<T>& params, bool always_on = false) {
  auto p = std::make_shared<const RoutingParams<T>>(params);
  const auto mul = [](T a, T b) { return a * b; };
  const auto add = [](T a, T b) { return a + b; };

  PluggableNetworks<T> nets;
  if (always_on) {
    nets.activation = always_on_activation_plugin<T>();
  } else {
    nets.activation = [p, add](const DenseTensor<T>& x) {
      const bool fixed = p->mode() == Mode::fixed;
      DenseTensor<T> dots = fixed ? contract(p->w_a, "id", x, "id", "d")
                                  : contract(x, "id", p->w_a, "d", "d");
      dots = scaled(dots, T(1) / std::sqrt(T(x.extent(0))));
      if (fixed) return ActivationScores<T>{broadcast(dots, "i", p->b_a, "i", add), false};
      for (T& v : dots.values()) v += p->b_a(0);
      return ActivationScores<T>{dots, false};
    };
  }
  nets.votes = [p, mul, add](const DenseTensor<T>& x) {
    // F1: n_inp x d_inp x n_out elementwise scalings, then F2 per vote.
    const DenseTensor<T> f1 =
        scaled(broadcast(x, "id", p->w_f1, "jd", mul), T(1) / std::sqrt(T(x.extent(0))));
    return broadcast(contract(f1, "idj", p->w_f2, "dh", "d"), "ijh", p->b_f2, "jh", add);
  };
  nets.predict = [p, mul, add](const DenseTensor<T>& x_out) {
    const DenseTensor<T> hidden = contract(normalize_vectors(x_out), "jh", p->w_g1, "hd", "h");
    return broadcast(broadcast(hidden, "jd", p->w_g2, "jd", mul), "jd", p->b_g2, "jd", add);
  };
  nets.score = [p, mul, add](const DenseTensor<T>& x, const DenseTensor<T>& x_hat) {
    const DenseTensor<T> dots = contract(x, "id", x_hat, "jd", "d");
    const bool fixed = p->mode() == Mode::fixed;
    const char* w_idx = fixed ? "ij" : "j";
    DenseTensor<T> s = broadcast(broadcast(dots, "ij", p->w_s, w_idx, mul), "ij", p->b_s, w_idx, add);
    for (T& v : s.values()) v = log_logistic(v);
    return s;
  };
  return nets;
}

/// Betas for the reference router from the same parameter record.
template <typename T>
BetaPair<T> concrete_betas(const DenseTensor<T>& x, const RoutingParams<T>& params) {
  if (params.fixed_betas) return {params.fixed_betas->beta_use, params.fixed_betas->beta_ign};
  const auto& g = *params.beta_generators;
  const auto add = [](T a, T b) { return a + b; };
  return {broadcast(contract(x, "id", g.w_use, "dj", "d"), "ij", g.b_use, "j", add),
          broadcast(contract(x, "id", g.w_ign, "dj", "d"), "ij", g.b_ign, "j", add)};
}

}  // namespace vecroute

#endif  // VECROUTE_CONCRETE_NETWORKS_HPP_
