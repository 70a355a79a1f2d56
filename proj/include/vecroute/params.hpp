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

#ifndef VECROUTE_PARAMS_HPP_
#define VECROUTE_PARAMS_HPP_

// Learnable tensors of the optimized router and their counts.
//
// In fixed mode every per-input parameter carries the index i. In variable
// mode that index is removed, and beta_use / beta_ign are generated from the
// input vectors by linear maps (W_use, B_use) and (W_ign, B_ign).

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vecroute/routing.hpp"
#include "vecroute/tensor.hpp"

namespace vecroute {

enum class Mode { fixed, variable };

inline const char* to_string(Mode m) { return m == Mode::fixed ? "fixed" : "variable"; }

inline Mode mode_of(const RoutingDims& dims) {
  return dims.variable_length() ? Mode::variable : Mode::fixed;
}

template <typename T>
struct FixedBetas {
  DenseTensor<T> beta_use;  // n_inp x n_out
  DenseTensor<T> beta_ign;
};

template <typename T>
struct BetaGenerators {
  DenseTensor<T> w_use;  // d_inp x n_out
  DenseTensor<T> w_ign;
  DenseTensor<T> b_use;  // n_out
  DenseTensor<T> b_ign;
};

template <typename T>
struct RoutingParams {
  DenseTensor<T> w_a;   // n_inp x d_inp | d_inp
  DenseTensor<T> b_a;   // n_inp | 1
  DenseTensor<T> w_f1;  // n_out x d_inp
  DenseTensor<T> w_f2;  // d_inp x d_out
  DenseTensor<T> b_f2;  // n_out x d_out
  DenseTensor<T> w_g1;  // d_out x d_inp
  DenseTensor<T> w_g2;  // n_out x d_inp
  DenseTensor<T> b_g2;  // n_out x d_inp
  DenseTensor<T> w_s;   // n_inp x n_out | n_out
  DenseTensor<T> b_s;   // n_inp x n_out | n_out
  std::optional<FixedBetas<T>> fixed_betas;
  std::optional<BetaGenerators<T>> beta_generators;

  Mode mode() const { return beta_generators ? Mode::variable : Mode::fixed; }

  /// Visits every present tensor with its canonical name, in file order.
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    visit(*this, fn);
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    visit(*this, fn);
  }

  std::size_t element_count() const {
    std::size_t total = 0;
    for_each_tensor([&](const std::string&, const DenseTensor<T>& t) { total += t.size(); });
    return total;
  }

  template <typename U>
  RoutingParams<U> cast() const {
    RoutingParams<U> out;
    out.w_a = w_a.template cast<U>();
    out.b_a = b_a.template cast<U>();
    out.w_f1 = w_f1.template cast<U>();
    out.w_f2 = w_f2.template cast<U>();
    out.b_f2 = b_f2.template cast<U>();
    out.w_g1 = w_g1.template cast<U>();
    out.w_g2 = w_g2.template cast<U>();
    out.b_g2 = b_g2.template cast<U>();
    out.w_s = w_s.template cast<U>();
    out.b_s = b_s.template cast<U>();
    if (fixed_betas) {
      out.fixed_betas = FixedBetas<U>{fixed_betas->beta_use.template cast<U>(),
                                      fixed_betas->beta_ign.template cast<U>()};
    }
    if (beta_generators) {
      out.beta_generators = BetaGenerators<U>{
          beta_generators->w_use.template cast<U>(), beta_generators->w_ign.template cast<U>(),
          beta_generators->b_use.template cast<U>(), beta_generators->b_ign.template cast<U>()};
    }
    return out;
  }

  friend bool operator==(const RoutingParams& a, const RoutingParams& b) {
    if (a.mode() != b.mode() || (a.fixed_betas.has_value() != b.fixed_betas.has_value())) {
      return false;
    }
    std::vector<const DenseTensor<T>*> ta, tb;
    a.for_each_tensor([&](const std::string&, const DenseTensor<T>& t) { ta.push_back(&t); });
    b.for_each_tensor([&](const std::string&, const DenseTensor<T>& t) { tb.push_back(&t); });
    return ta.size() == tb.size() &&
           std::equal(ta.begin(), ta.end(), tb.begin(), [](auto* x, auto* y) { return *x == *y; });
  }

 private:
  template <typename Self, typename Fn>
  static void visit(Self& self, Fn& fn) {
    fn(std::string("W_A"), self.w_a);
    fn(std::string("B_A"), self.b_a);
    fn(std::string("W_F1"), self.w_f1);
    fn(std::string("W_F2"), self.w_f2);
    fn(std::string("B_F2"), self.b_f2);
    fn(std::string("W_G1"), self.w_g1);
    fn(std::string("W_G2"), self.w_g2);
    fn(std::string("B_G2"), self.b_g2);
    fn(std::string("W_S"), self.w_s);
    fn(std::string("B_S"), self.b_s);
    if (self.fixed_betas) {
      fn(std::string("beta_use"), self.fixed_betas->beta_use);
      fn(std::string("beta_ign"), self.fixed_betas->beta_ign);
    }
    if (self.beta_generators) {
      fn(std::string("W_use"), self.beta_generators->w_use);
      fn(std::string("W_ign"), self.beta_generators->w_ign);
      fn(std::string("B_use"), self.beta_generators->b_use);
      fn(std::string("B_ign"), self.beta_generators->b_ign);
    }
  }
};

/// Canonical (name, shape) list for a parameter record with these bounds.
inline std::vector<std::pair<std::string, Shape>> parameter_layout(const RoutingDims& dims) {
  const std::size_t m = dims.n_out, di = dims.d_inp, dout = dims.d_out;
  std::vector<std::pair<std::string, Shape>> out;
  if (dims.n_inp) {
    const std::size_t n = *dims.n_inp;
    out = {{"W_A", {n, di}}, {"B_A", {n}}};
  } else {
    out = {{"W_A", {di}}, {"B_A", {1}}};
  }
  out.insert(out.end(), {{"W_F1", {m, di}},
                         {"W_F2", {di, dout}},
                         {"B_F2", {m, dout}},
                         {"W_G1", {dout, di}},
                         {"W_G2", {m, di}},
                         {"B_G2", {m, di}}});
  if (dims.n_inp) {
    const std::size_t n = *dims.n_inp;
    out.insert(out.end(), {{"W_S", {n, m}},
                           {"B_S", {n, m}},
                           {"beta_use", {n, m}},
                           {"beta_ign", {n, m}}});
  } else {
    out.insert(out.end(), {{"W_S", {m}},
                           {"B_S", {m}},
                           {"W_use", {di, m}},
                           {"W_ign", {di, m}},
                           {"B_use", {m}},
                           {"B_ign", {m}}});
  }
  return out;
}

/// Checks that params hold exactly the tensors `dims` calls for, finite.
template <typename T>
void validate_params(const RoutingParams<T>& params, const RoutingDims& dims) {
  dims.validate();
  if (params.fixed_betas.has_value() == params.beta_generators.has_value()) {
    throw DimensionError("parameters must hold exactly one of fixed betas or beta generators");
  }
  if (params.mode() != mode_of(dims)) {
    throw DimensionError(std::string("parameters are in ") + to_string(params.mode()) +
                         " mode but dims call for " + to_string(mode_of(dims)) + " mode");
  }
  const auto layout = parameter_layout(dims);
  std::size_t k = 0;
  params.for_each_tensor([&](const std::string& name, const DenseTensor<T>& t) {
    require_shape(t, layout.at(k).second, name);
    check_finite(t, name);
    ++k;
  });
}

struct FParamCounts {
  std::size_t factored = 0;                    // n_out d_inp + d_inp d_out + n_out d_out
  std::optional<std::size_t> naive_pairwise;   // n_inp n_out d_inp d_out (fixed n_inp only)
  std::size_t naive_per_output = 0;            // n_out d_inp d_out
};

/// Parameter count of the vote network, against two naive alternatives: a
/// separate linear map per (input, output) pair or per output.
inline FParamCounts f_param_count(const RoutingDims& dims) {
  dims.validate();
  const std::size_t m = dims.n_out, di = dims.d_inp, dout = dims.d_out;
  FParamCounts c;
  c.factored = m * di + di * dout + m * dout;
  c.naive_per_output = m * di * dout;
  if (dims.n_inp) c.naive_pairwise = *dims.n_inp * m * di * dout;
  return c;
}

/// Total parameter count of the whole record, from the closed form.
inline std::size_t total_param_count(const RoutingDims& dims) {
  dims.validate();
  const std::size_t m = dims.n_out, di = dims.d_inp, dout = dims.d_out;
  const std::size_t f = f_param_count(dims).factored;
  const std::size_t g = dout * di + 2 * m * di;
  if (dims.n_inp) {
    const std::size_t n = *dims.n_inp;
    return n * di + n + f + g + 4 * n * m;
  }
  return di + 1 + f + g + 2 * m + 2 * di * m + 2 * m;
}

}  // namespace vecroute

#endif  // VECROUTE_PARAMS_HPP_
