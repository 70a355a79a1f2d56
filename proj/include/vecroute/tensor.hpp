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

#ifndef VECROUTE_TENSOR_HPP_
#define VECROUTE_TENSOR_HPP_

// Dense row-major tensors of rank 1 to 3, labeled contractions and the
// scalar kernels shared by both routers.
//
// Contractions and broadcasts name tensor axes with one character per axis
// ("ij", "id", ...). Summation always proceeds in ascending index order, so
// results are reproducible run to run within one build.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "vecroute/alloc.hpp"
#include "vecroute/errors.hpp"

namespace vecroute {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::string out;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k) out += 'x';
    out += std::to_string(shape[k]);
  }
  return out.empty() ? "scalar" : out;
}

inline std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>{});
}

template <typename T>
class DenseTensor {
  static_assert(std::is_floating_point_v<T>);

 public:
  using value_type = T;
  using Storage = std::vector<T, TrackingAllocator<T>>;

  // Empty tensor with no shape; used for parameters that are not present.
  DenseTensor() = default;

  explicit DenseTensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)) {
    validate_shape();
    data_.assign(element_count(shape_), fill);
  }

  DenseTensor(Shape shape, std::span<const T> values) : shape_(std::move(shape)) {
    validate_shape();
    if (values.size() != element_count(shape_)) {
      throw DimensionError("tensor of shape " + shape_string(shape_) + " needs " +
                           std::to_string(element_count(shape_)) + " values, got " +
                           std::to_string(values.size()));
    }
    data_.assign(values.begin(), values.end());
    if (!all_finite()) throw NumericError("tensor constructed from non-finite values");
  }

  DenseTensor(Shape shape, std::initializer_list<T> values)
      : DenseTensor(std::move(shape), std::span<const T>(values.begin(), values.size())) {}

  bool empty() const { return shape_.empty(); }
  std::size_t rank() const { return shape_.size(); }
  const Shape& shape() const { return shape_; }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<const T> values() const { return {data_.data(), data_.size()}; }
  std::span<T> values() { return {data_.data(), data_.size()}; }
  const T* data() const { return data_.data(); }
  T* data() { return data_.data(); }

  T& operator()(std::size_t i) {
    assert(rank() == 1);
    return data_[i];
  }
  T operator()(std::size_t i) const {
    assert(rank() == 1);
    return data_[i];
  }
  T& operator()(std::size_t i, std::size_t j) {
    assert(rank() == 2);
    return data_[i * shape_[1] + j];
  }
  T operator()(std::size_t i, std::size_t j) const {
    assert(rank() == 2);
    return data_[i * shape_[1] + j];
  }
  T& operator()(std::size_t i, std::size_t j, std::size_t k) {
    assert(rank() == 3);
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  T operator()(std::size_t i, std::size_t j, std::size_t k) const {
    assert(rank() == 3);
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  // Pointer to the start of row i of a rank-2 tensor.
  const T* row(std::size_t i) const { return data_.data() + i * shape_[1]; }
  T* row(std::size_t i) { return data_.data() + i * shape_[1]; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  template <typename U>
  DenseTensor<U> cast() const {
    DenseTensor<U> out;
    if (empty()) return out;
    out = DenseTensor<U>(shape_);
    std::transform(data_.begin(), data_.end(), out.data(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  friend bool operator==(const DenseTensor& a, const DenseTensor& b) {
    return a.shape_ == b.shape_ && std::equal(a.data_.begin(), a.data_.end(), b.data_.begin());
  }

 private:
  void validate_shape() const {
    if (shape_.empty() || shape_.size() > 3) {
      throw DimensionError("tensor rank must be 1 to 3, got " + std::to_string(shape_.size()));
    }
    for (std::size_t e : shape_) {
      if (e == 0) throw DimensionError("tensor extents must be positive: " + shape_string(shape_));
    }
  }

  Shape shape_;
  Storage data_;
};

template <typename T>
void require_shape(const DenseTensor<T>& t, const Shape& expected, std::string_view what) {
  if (t.shape() != expected) {
    throw DimensionError(std::string(what) + ": expected shape " + shape_string(expected) +
                         ", got " + shape_string(t.shape()));
  }
}

template <typename T>
void check_finite(const DenseTensor<T>& t, std::string_view what) {
  if (!t.all_finite()) throw NumericError("non-finite values in " + std::string(what));
}

namespace detail {

struct AxisPlan {
  std::string labels;                   // every distinct label, output labels first
  std::vector<std::size_t> extents;     // extent per label
  std::string out_labels;
  std::vector<std::size_t> a_strides;   // stride per label for a (0 if absent)
  std::vector<std::size_t> b_strides;
};

inline std::vector<std::size_t> row_major_strides(const Shape& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t k = shape.size(); k-- > 1;) s[k - 1] = s[k] * shape[k];
  return s;
}

inline void check_labels(const Shape& shape, std::string_view labels, std::string_view name) {
  if (labels.size() != shape.size()) {
    throw DimensionError(std::string(name) + " has rank " + std::to_string(shape.size()) +
                         " but index labels \"" + std::string(labels) + "\"");
  }
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels.find(labels[k], k + 1) != std::string_view::npos) {
      throw DimensionError(std::string(name) + " repeats index '" + labels[k] + "'");
    }
  }
}

inline AxisPlan plan_axes(const Shape& a_shape, std::string_view a_idx, const Shape& b_shape,
                          std::string_view b_idx, std::string_view summed) {
  check_labels(a_shape, a_idx, "left operand");
  check_labels(b_shape, b_idx, "right operand");
  AxisPlan plan;
  auto extent_of = [&](char c) -> std::size_t {
    const auto pa = a_idx.find(c);
    const auto pb = b_idx.find(c);
    if (pa != std::string_view::npos && pb != std::string_view::npos &&
        a_shape[pa] != b_shape[pb]) {
      throw DimensionError(std::string("index '") + c + "' has extent " +
                           std::to_string(a_shape[pa]) + " in left operand but " +
                           std::to_string(b_shape[pb]) + " in right operand");
    }
    return pa != std::string_view::npos ? a_shape[pa] : b_shape[pb];
  };
  for (char c : summed) {
    if (a_idx.find(c) == std::string_view::npos || b_idx.find(c) == std::string_view::npos) {
      throw DimensionError(std::string("summed index '") + c + "' must appear in both operands");
    }
  }
  auto add_output = [&](char c) {
    if (summed.find(c) == std::string_view::npos &&
        plan.out_labels.find(c) == std::string::npos) {
      plan.out_labels += c;
    }
  };
  for (char c : a_idx) add_output(c);
  for (char c : b_idx) add_output(c);
  if (plan.out_labels.size() > 3) {
    throw DimensionError("contraction result would have rank " +
                         std::to_string(plan.out_labels.size()) + " (max 3)");
  }
  plan.labels = plan.out_labels + std::string(summed);
  const auto a_str = row_major_strides(a_shape);
  const auto b_str = row_major_strides(b_shape);
  for (char c : plan.labels) {
    plan.extents.push_back(extent_of(c));
    const auto pa = a_idx.find(c);
    const auto pb = b_idx.find(c);
    plan.a_strides.push_back(pa == std::string_view::npos ? 0 : a_str[pa]);
    plan.b_strides.push_back(pb == std::string_view::npos ? 0 : b_str[pb]);
  }
  return plan;
}

}  // namespace detail

/// Contracts two tensors over the indices in `summed`.
///
/// Result axes are the non-summed labels of `a` followed by those of `b` not
/// already present; a label shared by both operands but not summed is a
/// broadcast (elementwise) axis. Each result element sums its terms in
/// ascending lexicographic order of the summed indices, taken in the order
/// they are listed in `summed`.
template <typename T>
DenseTensor<T> contract(const DenseTensor<T>& a, std::string_view a_idx, const DenseTensor<T>& b,
                        std::string_view b_idx, std::string_view summed) {
  const auto plan = detail::plan_axes(a.shape(), a_idx, b.shape(), b_idx, summed);
  const std::size_t n_out = plan.out_labels.size();
  const std::size_t n_all = plan.labels.size();

  Shape out_shape(plan.extents.begin(), plan.extents.begin() + n_out);
  if (out_shape.empty()) out_shape = {1};
  DenseTensor<T> out(out_shape);

  std::size_t sum_count = 1;
  for (std::size_t k = n_out; k < n_all; ++k) sum_count *= plan.extents[k];

  std::array<std::size_t, 6> idx{};
  const std::size_t total_out = out.size();
  for (std::size_t flat = 0; flat < total_out; ++flat) {
    std::size_t rem = flat;
    for (std::size_t k = n_out; k-- > 0;) {
      idx[k] = rem % plan.extents[k];
      rem /= plan.extents[k];
    }
    std::size_t a_base = 0, b_base = 0;
    for (std::size_t k = 0; k < n_out; ++k) {
      a_base += idx[k] * plan.a_strides[k];
      b_base += idx[k] * plan.b_strides[k];
    }
    T acc = T(0);
    for (std::size_t s = 0; s < sum_count; ++s) {
      std::size_t r = s;
      std::size_t a_off = a_base, b_off = b_base;
      for (std::size_t k = n_all; k-- > n_out;) {
        const std::size_t v = r % plan.extents[k];
        r /= plan.extents[k];
        a_off += v * plan.a_strides[k];
        b_off += v * plan.b_strides[k];
      }
      acc += a.data()[a_off] * b.data()[b_off];
    }
    out.data()[flat] = acc;
  }
  return out;
}

/// Elementwise combination with broadcasting over indices missing from one
/// operand, e.g. broadcast("i", gates, "ij", routing, multiply) scales each
/// row of `routing` by the matching gate.
template <typename T, typename Op>
DenseTensor<T> broadcast(const DenseTensor<T>& a, std::string_view a_idx, const DenseTensor<T>& b,
                         std::string_view b_idx, Op op) {
  const auto plan = detail::plan_axes(a.shape(), a_idx, b.shape(), b_idx, "");
  const std::size_t n = plan.out_labels.size();
  DenseTensor<T> out(Shape(plan.extents.begin(), plan.extents.end()));
  std::array<std::size_t, 6> idx{};
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::size_t rem = flat;
    std::size_t a_off = 0, b_off = 0;
    for (std::size_t k = n; k-- > 0;) {
      idx[k] = rem % plan.extents[k];
      rem /= plan.extents[k];
      a_off += idx[k] * plan.a_strides[k];
      b_off += idx[k] * plan.b_strides[k];
    }
    out.data()[flat] = op(a.data()[a_off], b.data()[b_off]);
  }
  return out;
}

template <typename T>
DenseTensor<T> scaled(const DenseTensor<T>& a, T alpha) {
  DenseTensor<T> out = a;
  for (T& v : out.values()) v *= alpha;
  return out;
}

// Marker for an activation score of +infinity without Inf arithmetic.
struct AlwaysOn {};
inline constexpr AlwaysOn always_on{};

/// Logistic function 1/(1+e^-z), evaluated without overflow for any finite z.
template <typename T>
T logistic(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

inline double logistic(AlwaysOn) { return 1.0; }

/// log f(z) = min(z,0) - log1p(e^-|z|).
template <typename T>
T log_logistic(T z) {
  return std::min(z, T(0)) - std::log1p(std::exp(-std::abs(z)));
}

/// Softmax over the last axis of a rank-2 tensor, stabilized by subtracting
/// each row's maximum.
template <typename T>
DenseTensor<T> softmax_rows(const DenseTensor<T>& scores) {
  if (scores.rank() != 2) throw DimensionError("softmax_rows expects a rank-2 tensor");
  DenseTensor<T> out(scores.shape());
  const std::size_t cols = scores.extent(1);
  for (std::size_t i = 0; i < scores.extent(0); ++i) {
    const T* in = scores.row(i);
    T* o = out.row(i);
    const T mx = *std::max_element(in, in + cols);
    T sum = T(0);
    for (std::size_t j = 0; j < cols; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (std::size_t j = 0; j < cols; ++j) o[j] /= sum;
  }
  return out;
}

inline constexpr double kNormalizeEpsilon = 1e-5;

/// Normalizes each row to zero mean and unit (population) variance:
/// (x - mean) / sqrt(var + eps).
template <typename T>
DenseTensor<T> normalize_vectors(const DenseTensor<T>& x, T eps = T(kNormalizeEpsilon)) {
  if (x.rank() != 2) throw DimensionError("normalize_vectors expects a rank-2 tensor");
  DenseTensor<T> out(x.shape());
  const std::size_t cols = x.extent(1);
  for (std::size_t j = 0; j < x.extent(0); ++j) {
    const T* in = x.row(j);
    T* o = out.row(j);
    T mean = T(0);
    for (std::size_t h = 0; h < cols; ++h) mean += in[h];
    mean /= T(cols);
    T var = T(0);
    for (std::size_t h = 0; h < cols; ++h) var += (in[h] - mean) * (in[h] - mean);
    var /= T(cols);
    const T inv = T(1) / std::sqrt(var + eps);
    for (std::size_t h = 0; h < cols; ++h) o[h] = (in[h] - mean) * inv;
  }
  return out;
}

/// max |a - b| over all elements.
template <typename T>
double max_abs_diff(const DenseTensor<T>& a, const DenseTensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("cannot compare shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    m = std::max(m, std::abs(double(a.data()[k]) - double(b.data()[k])));
  }
  return m;
}

/// Relative L-infinity distance: max|a - b| / max|reference|. Falls back to
/// the absolute distance when the reference is identically zero.
template <typename T>
double relative_linf(const DenseTensor<T>& a, const DenseTensor<T>& reference) {
  const double diff = max_abs_diff(a, reference);
  double scale = 0.0;
  for (T v : reference.values()) scale = std::max(scale, std::abs(double(v)));
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace vecroute

#endif  // VECROUTE_TENSOR_HPP_
