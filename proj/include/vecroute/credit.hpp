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

#ifndef VECROUTE_CREDIT_HPP_
#define VECROUTE_CREDIT_HPP_

// Composition of credit-assignment matrices over networks of routings.
//
// A routing whose vote network treats each input vector independently mixes
// data across inputs only through its coefficients phi_ij. The end-to-end
// credit of a composite network is then an algebraic combination of the
// per-routing matrices:
//
//   sequential     R2(R1(x))            phi1 . phi2
//   residual       R1(x) + R2(R1(x))    phi1 + phi1 . phi2
//   sum            R1(x1) + R2(x2)      [phi1; phi2]         (row stack)
//   concatenation  R1(x1) (+) R2(x2)    [[phi1, 0], [0, phi2]]

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "vecroute/errors.hpp"
#include "vecroute/tensor.hpp"

namespace vecroute {

template <typename T>
class CreditMatrix {
 public:
  CreditMatrix(DenseTensor<T> values, std::size_t input_arity, std::size_t output_arity)
      : values_(std::move(values)), input_arity_(input_arity), output_arity_(output_arity) {
    if (values_.rank() != 2 || values_.extent(0) != input_arity_ ||
        values_.extent(1) != output_arity_) {
      throw CreditError("credit matrix of shape " + shape_string(values_.shape()) +
                        " does not match arities " + std::to_string(input_arity_) + " x " +
                        std::to_string(output_arity_));
    }
    if (!values_.all_finite()) throw CreditError("credit matrix holds non-finite values");
  }

  // Takes arities from the shape of a phi matrix.
  explicit CreditMatrix(DenseTensor<T> phi)
      : CreditMatrix(phi, phi.rank() == 2 ? phi.extent(0) : 0,
                     phi.rank() == 2 ? phi.extent(1) : 0) {}

  static CreditMatrix identity(std::size_t n) {
    DenseTensor<T> v({n, n});
    for (std::size_t k = 0; k < n; ++k) v(k, k) = T(1);
    return CreditMatrix(std::move(v), n, n);
  }

  static CreditMatrix zeros(std::size_t inputs, std::size_t outputs) {
    return CreditMatrix(DenseTensor<T>({inputs, outputs}), inputs, outputs);
  }

  const DenseTensor<T>& values() const { return values_; }
  std::size_t input_arity() const { return input_arity_; }
  std::size_t output_arity() const { return output_arity_; }
  T operator()(std::size_t i, std::size_t j) const { return values_(i, j); }

  friend bool operator==(const CreditMatrix&, const CreditMatrix&) = default;

 private:
  DenseTensor<T> values_;
  std::size_t input_arity_;
  std::size_t output_arity_;
};

namespace detail {

template <typename T>
DenseTensor<T> matmul(const DenseTensor<T>& a, const DenseTensor<T>& b) {
  const std::size_t rows = a.extent(0), inner = a.extent(1), cols = b.extent(1);
  DenseTensor<T> out({rows, cols});
  for (std::size_t i = 0; i < rows; ++i) {
    T* o = out.row(i);
    for (std::size_t k = 0; k < inner; ++k) {
      const T aik = a(i, k);
      const T* brow = b.row(k);
      for (std::size_t j = 0; j < cols; ++j) o[j] += aik * brow[j];
    }
  }
  return out;
}

}  // namespace detail

/// End-to-end credit of R2(R1(x)): sum_j' a_ij' b_j'j.
template <typename T>
CreditMatrix<T> compose_sequential(const CreditMatrix<T>& a, const CreditMatrix<T>& b) {
  if (a.output_arity() != b.input_arity()) {
    throw CreditError("sequential composition needs a's " + std::to_string(a.output_arity()) +
                      " outputs to feed b's " + std::to_string(b.input_arity()) + " inputs");
  }
  return CreditMatrix<T>(detail::matmul(a.values(), b.values()), a.input_arity(),
                         b.output_arity());
}

/// End-to-end credit of R1(x) + R2(R1(x)): a + a.b. The residual routing
/// must map its inputs onto the same index, so b is square.
template <typename T>
CreditMatrix<T> compose_residual(const CreditMatrix<T>& a, const CreditMatrix<T>& b) {
  if (b.input_arity() != b.output_arity() || a.output_arity() != b.input_arity()) {
    throw CreditError("residual composition needs a square b matching a's " +
                      std::to_string(a.output_arity()) + " outputs, got " +
                      std::to_string(b.input_arity()) + " x " + std::to_string(b.output_arity()));
  }
  DenseTensor<T> out = detail::matmul(a.values(), b.values());
  for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] += a.values().data()[k];
  return CreditMatrix<T>(std::move(out), a.input_arity(), a.output_arity());
}

/// End-to-end credit of R1(x1) + R2(x2): rows of a, then rows of b. Operand
/// order is significant.
template <typename T>
CreditMatrix<T> compose_sum(const CreditMatrix<T>& a, const CreditMatrix<T>& b) {
  if (a.output_arity() != b.output_arity()) {
    throw CreditError("summed routings must share outputs: " + std::to_string(a.output_arity()) +
                      " vs " + std::to_string(b.output_arity()));
  }
  const std::size_t ra = a.input_arity(), rb = b.input_arity(), cols = a.output_arity();
  DenseTensor<T> out({ra + rb, cols});
  std::copy(a.values().data(), a.values().data() + ra * cols, out.data());
  std::copy(b.values().data(), b.values().data() + rb * cols, out.data() + ra * cols);
  return CreditMatrix<T>(std::move(out), ra + rb, cols);
}

/// End-to-end credit of the concatenated outputs of R1(x1) and R2(x2):
/// block-diagonal [[a, 0], [0, b]].
template <typename T>
CreditMatrix<T> compose_concat(const CreditMatrix<T>& a, const CreditMatrix<T>& b) {
  const std::size_t ra = a.input_arity(), ca = a.output_arity();
  const std::size_t rb = b.input_arity(), cb = b.output_arity();
  DenseTensor<T> out({ra + rb, ca + cb});
  for (std::size_t i = 0; i < ra; ++i) std::copy(a.values().row(i), a.values().row(i) + ca, out.row(i));
  for (std::size_t i = 0; i < rb; ++i) {
    std::copy(b.values().row(i), b.values().row(i) + cb, out.row(ra + i) + ca);
  }
  return CreditMatrix<T>(std::move(out), ra + rb, ca + cb);
}

/// Population standard deviation over all elements.
template <typename T>
double element_stddev(const DenseTensor<T>& t) {
  double mean = 0.0;
  for (T v : t.values()) mean += double(v);
  mean /= double(t.size());
  double var = 0.0;
  for (T v : t.values()) var += (double(v) - mean) * (double(v) - mean);
  return std::sqrt(var / double(t.size()));
}

inline constexpr double kDegenerateCreditStddev = 1e-12;

/// Product of three chained credit matrices scaled to unit element-wise
/// standard deviation. The mean is not removed.
template <typename T>
CreditMatrix<T> end_to_end_three(const CreditMatrix<T>& phi1, const CreditMatrix<T>& phi2,
                                 const CreditMatrix<T>& phi3) {
  CreditMatrix<T> p = compose_sequential(compose_sequential(phi1, phi2), phi3);
  const double sigma = element_stddev(p.values());
  if (!(sigma >= kDegenerateCreditStddev)) {
    throw CreditError("end-to-end credit has standard deviation " + std::to_string(sigma) +
                      "; cannot normalize a constant matrix");
  }
  DenseTensor<T> out = p.values();
  for (T& v : out.values()) v = T(double(v) / sigma);
  return CreditMatrix<T>(std::move(out), p.input_arity(), p.output_arity());
}

/// Credit summed over groups of inputs, one row per group.
template <typename T>
struct AttributionReport {
  std::vector<std::vector<std::size_t>> groups;
  DenseTensor<T> credit;  // groups x outputs

  /// CSV with columns output_index,group_id,credit, ordered by output then
  /// group.
  void write_csv(std::ostream& os) const {
    os << "output_index,group_id,credit\n";
    const auto old_precision = os.precision(9);
    for (std::size_t j = 0; j < credit.extent(1); ++j) {
      for (std::size_t g = 0; g < credit.extent(0); ++g) {
        os << j << ',' << g << ',' << double(credit(g, j)) << '\n';
      }
    }
    os.precision(old_precision);
  }
};

/// Sums credit within each group; groups must partition the input index.
template <typename T>
AttributionReport<T> attribution_report(const CreditMatrix<T>& e2e,
                                        std::vector<std::vector<std::size_t>> groups) {
  const std::size_t n = e2e.input_arity();
  std::vector<int> seen(n, 0);
  for (const auto& g : groups) {
    if (g.empty()) throw CreditError("attribution groups must be non-empty");
    for (std::size_t i : g) {
      if (i >= n) throw CreditError("attribution group names input " + std::to_string(i) +
                                    " of " + std::to_string(n));
      if (seen[i]++) throw CreditError("input " + std::to_string(i) + " is in two groups");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw CreditError("attribution groups do not cover every input");
  }
  const std::size_t cols = e2e.output_arity();
  DenseTensor<T> credit({groups.size(), cols});
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t i : groups[g]) {
      for (std::size_t j = 0; j < cols; ++j) credit(g, j) += e2e(i, j);
    }
  }
  return {std::move(groups), std::move(credit)};
}

}  // namespace vecroute

#endif  // VECROUTE_CREDIT_HPP_
