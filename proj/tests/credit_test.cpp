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

#include "vecroute/credit.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "test_util.hpp"
#include "vecroute/optimized_router.hpp"
#include "vecroute/params_io.hpp"

namespace vecroute {
namespace {

using ::vecroute::testing::random_tensor;
using C = CreditMatrix<double>;

C random_credit(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  return C(random_tensor<double>({n, m}, rng));
}

double loop_product(const C& a, const C& b, std::size_t i, std::size_t k) {
  double s = 0;
  for (std::size_t j = 0; j < a.output_arity(); ++j) s += a(i, j) * b(j, k);
  return s;
}

TEST(CreditMatrixTest, ValidatesShapeAndValues) {
  EXPECT_THROW(C(DenseTensor<double>({2, 3}), 3, 2), CreditError);
  EXPECT_THROW(C(DenseTensor<double>({4})), CreditError);
  DenseTensor<double> bad({1, 2});
  bad(0, 1) = std::nan("");
  EXPECT_THROW(C(bad, 1, 2), CreditError);
  const auto i3 = C::identity(3);
  EXPECT_EQ(i3(1, 1), 1.0);
  EXPECT_EQ(i3(1, 2), 0.0);
}

TEST(ComposeTest, SequentialIsMatrixProduct) {
  std::mt19937_64 rng(1);
  const auto a = random_credit(4, 3, rng);
  const auto b = random_credit(3, 5, rng);
  const auto c = compose_sequential(a, b);
  EXPECT_EQ(c.input_arity(), 4u);
  EXPECT_EQ(c.output_arity(), 5u);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(c(i, k), loop_product(a, b, i, k), 1e-14);
  EXPECT_THROW(compose_sequential(a, a), CreditError);
}

TEST(ComposeTest, IdentityIsNeutral) {
  std::mt19937_64 rng(2);
  const auto a = random_credit(4, 3, rng);
  EXPECT_EQ(compose_sequential(C::identity(4), a), a);
  EXPECT_EQ(compose_sequential(a, C::identity(3)), a);
}

TEST(ComposeTest, SequentialIsAssociative) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n0 = testing::uniform(rng, 1, 8), n1 = testing::uniform(rng, 1, 8);
    const std::size_t n2 = testing::uniform(rng, 1, 8), n3 = testing::uniform(rng, 1, 8);
    const auto a = random_credit(n0, n1, rng);
    const auto b = random_credit(n1, n2, rng);
    const auto c = random_credit(n2, n3, rng);
    EXPECT_LE(relative_linf(compose_sequential(compose_sequential(a, b), c).values(),
                            compose_sequential(a, compose_sequential(b, c)).values()),
              1e-12);
  }
}

TEST(ComposeTest, ResidualAddsSkipPath) {
  std::mt19937_64 rng(4);
  const auto a = random_credit(5, 3, rng);
  const auto b = random_credit(3, 3, rng);
  const auto r = compose_residual(a, b);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t k = 0; k < 3; ++k)
      EXPECT_NEAR(r(i, k), a(i, k) + loop_product(a, b, i, k), 1e-14);
  EXPECT_EQ(compose_residual(a, C::zeros(3, 3)), a);
  EXPECT_THROW(compose_residual(a, random_credit(3, 4, rng)), CreditError);
  EXPECT_THROW(compose_residual(a, random_credit(4, 4, rng)), CreditError);
}

TEST(ComposeTest, SumStacksRowsInOrder) {
  std::mt19937_64 rng(5);
  const auto a = random_credit(2, 3, rng);
  const auto b = random_credit(4, 3, rng);
  const auto s = compose_sum(a, b);
  ASSERT_EQ(s.input_arity(), 6u);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(s(i, k), a(i, k));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(s(2 + i, k), b(i, k));
  }
  EXPECT_NE(compose_sum(a, b), compose_sum(b, a));
  EXPECT_THROW(compose_sum(a, random_credit(2, 4, rng)), CreditError);
}

TEST(ComposeTest, ConcatIsBlockDiagonal) {
  std::mt19937_64 rng(6);
  const auto a = random_credit(2, 3, rng);
  const auto b = random_credit(4, 1, rng);
  const auto c = compose_concat(a, b);
  ASSERT_EQ(c.input_arity(), 6u);
  ASSERT_EQ(c.output_arity(), 4u);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t k = 0; k < 4; ++k) {
      double want = 0;
      if (i < 2 && k < 3) want = a(i, k);
      if (i >= 2 && k >= 3) want = b(i - 2, k - 3);
      EXPECT_EQ(c(i, k), want);
    }
}

TEST(EndToEndTest, HasUnitStandardDeviation) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto e = end_to_end_three(random_credit(6, 4, rng), random_credit(4, 5, rng),
                                    random_credit(5, 3, rng));
    double mean = 0, var = 0;
    for (double v : e.values().values()) mean += v;
    mean /= 18;
    for (double v : e.values().values()) var += (v - mean) * (v - mean);
    EXPECT_NEAR(std::sqrt(var / 18), 1.0, 1e-12);
  }
}

TEST(EndToEndTest, IsScaleInvariantAndKeepsArgmax) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p1 = random_credit(6, 4, rng), p2 = random_credit(4, 5, rng);
    const auto p3 = random_credit(5, 3, rng);
    const auto e = end_to_end_three(p1, p2, p3);
    const double c = std::exp(testing::random_tensor<double>({1}, rng)(0) * 3);
    DenseTensor<double> scaled1 = p1.values();
    for (double& v : scaled1.values()) v *= c;
    EXPECT_LE(relative_linf(end_to_end_three(C(scaled1), p2, p3).values(), e.values()), 1e-12);

    const auto raw = compose_sequential(compose_sequential(p1, p2), p3);
    for (std::size_t k = 0; k < 3; ++k) {
      std::size_t best_raw = 0, best = 0;
      for (std::size_t i = 1; i < 6; ++i) {
        if (raw(i, k) > raw(best_raw, k)) best_raw = i;
        if (e(i, k) > e(best, k)) best = i;
      }
      EXPECT_EQ(best, best_raw);
    }
  }
}

TEST(EndToEndTest, RejectsConstantProduct) {
  const C ones(DenseTensor<double>({3, 3}, 1.0));
  EXPECT_THROW(end_to_end_three(ones, ones, ones), CreditError);
  EXPECT_THROW(end_to_end_three(C::zeros(2, 3), C::identity(3), C::identity(3)), CreditError);
}

TEST(AttributionTest, SumsGroupsAndWritesCsv) {
  const C e(DenseTensor<double>({3, 2}, {1, 2, 3, 4, 5, 6}));
  const auto r = attribution_report(e, {{0, 2}, {1}});
  EXPECT_EQ(r.credit(0, 0), 6.0);
  EXPECT_EQ(r.credit(0, 1), 8.0);
  EXPECT_EQ(r.credit(1, 0), 3.0);
  EXPECT_EQ(r.credit(1, 1), 4.0);
  std::ostringstream os;
  r.write_csv(os);
  EXPECT_EQ(os.str(), "output_index,group_id,credit\n0,0,6\n0,1,3\n1,0,8\n1,1,4\n");
}

TEST(AttributionTest, RejectsNonPartitions) {
  const auto e = C::identity(3);
  EXPECT_THROW(attribution_report(e, {{0, 1}}), CreditError);
  EXPECT_THROW(attribution_report(e, {{0, 1}, {1, 2}}), CreditError);
  EXPECT_THROW(attribution_report(e, {{0, 1, 2}, {}}), CreditError);
  EXPECT_THROW(attribution_report(e, {{0, 1, 3}}), CreditError);
}

// Stage setups in which every vote is linear in the routed vector and one
// routing's votes do not depend on the output index, so credit composes
// exactly over the routed inputs.
struct LinearStage {
  RoutingDims dims;
  RoutingParams<double> params;
};

LinearStage linear_stage(std::size_t m, std::size_t di, std::size_t dout, std::uint64_t seed,
                         bool shared_votes) {
  LinearStage s;
  s.dims.n_out = m;
  s.dims.d_inp = di;
  s.dims.d_out = dout;
  s.dims.n_iters = 3;
  s.params = init_params(s.dims, seed, InitOptions::randomized()).cast<double>();
  s.params.b_f2 = DenseTensor<double>({m, dout});
  if (shared_votes) s.params.w_f1 = DenseTensor<double>({m, di}, 1.0);
  return s;
}

// Votes of a lone vector u at every output k of a stage, evaluated as input 0
// of a sequence of length n.
DenseTensor<double> lone_votes(const double* u, std::size_t n, const LinearStage& s) {
  DenseTensor<double> seq({n, s.dims.d_inp});
  std::copy(u, u + s.dims.d_inp, seq.row(0));
  return input_votes(seq, 0, s.params);
}

TEST(CompositionSoundnessTest, SequentialCreditReconstructsOutputs) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n0 = testing::uniform(rng, 2, 9), m1 = testing::uniform(rng, 2, 6);
    const std::size_t m2 = testing::uniform(rng, 1, 5);
    const std::size_t d0 = testing::uniform(rng, 1, 8), d1 = testing::uniform(rng, 1, 8);
    const std::size_t d2 = testing::uniform(rng, 1, 8);
    const auto s1 = linear_stage(m1, d0, d1, 100 + trial, true);
    const auto s2 = linear_stage(m2, d1, d2, 200 + trial, false);
    const auto x = random_tensor<double>({n0, d0}, rng);
    const auto r1 = route_optimized(x, s1.params, s1.dims);
    const auto r2 = route_optimized(r1.x_out, s2.params, s2.dims);
    const auto e2e = compose_sequential(C(r1.phi), C(r2.phi));

    DenseTensor<double> z({m2, d2});
    for (std::size_t i = 0; i < n0; ++i) {
      const auto u = input_votes(x, i, s1.params);  // identical rows
      const auto l = lone_votes(u.row(0), m1, s2);
      for (std::size_t k = 0; k < m2; ++k)
        for (std::size_t h = 0; h < d2; ++h) z(k, h) += e2e(i, k) * l(k, h);
    }
    EXPECT_LE(relative_linf(z, r2.x_out), 1e-10) << "trial " << trial;
  }
}

TEST(CompositionSoundnessTest, ResidualCreditReconstructsOutputs) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n0 = testing::uniform(rng, 2, 9), m = testing::uniform(rng, 2, 6);
    const std::size_t d0 = testing::uniform(rng, 1, 8), d = testing::uniform(rng, 1, 8);
    const auto s1 = linear_stage(m, d0, d, 300 + trial, true);
    const auto s2 = linear_stage(m, d, d, 400 + trial, false);
    const auto x = random_tensor<double>({n0, d0}, rng);
    const auto r1 = route_optimized(x, s1.params, s1.dims);
    const auto r2 = route_optimized(r1.x_out, s2.params, s2.dims);
    DenseTensor<double> y = r1.x_out;
    for (std::size_t k = 0; k < y.size(); ++k) y.data()[k] += r2.x_out.data()[k];

    const auto e2e = compose_residual(C(r1.phi), C(r2.phi));
    const auto through = compose_sequential(C(r1.phi), C(r2.phi));
    DenseTensor<double> z({m, d});
    for (std::size_t i = 0; i < n0; ++i) {
      const auto u = input_votes(x, i, s1.params);
      const auto l = lone_votes(u.row(0), m, s2);
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t h = 0; h < d; ++h) {
          const double skip = e2e(i, k) - through(i, k);  // phi1_ik
          z(k, h) += skip * u(0, h) + through(i, k) * l(k, h);
        }
    }
    EXPECT_LE(relative_linf(z, y), 1e-10) << "trial " << trial;
  }
}

TEST(CompositionSoundnessTest, SumCreditSplitsByInputSequence) {
  std::mt19937_64 rng(11);
  const std::size_t n1 = 5, n2 = 3, m = 4, d = 6, dout = 3;
  const auto s1 = linear_stage(m, d, dout, 500, false);
  const auto s2 = linear_stage(m, d, dout, 501, false);
  const auto x1 = random_tensor<double>({n1, d}, rng);
  const auto x2 = random_tensor<double>({n2, d}, rng);
  const auto r1 = route_optimized(x1, s1.params, s1.dims);
  const auto r2 = route_optimized(x2, s2.params, s2.dims);
  const auto cred = compose_sum(C(r1.phi), C(r2.phi));

  DenseTensor<double> z({m, dout}), y({m, dout});
  for (std::size_t i = 0; i < n1 + n2; ++i) {
    const auto v = i < n1 ? input_votes(x1, i, s1.params) : input_votes(x2, i - n1, s2.params);
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t h = 0; h < dout; ++h) z(k, h) += cred(i, k) * v(k, h);
  }
  for (std::size_t k = 0; k < y.size(); ++k) y.data()[k] = r1.x_out.data()[k] + r2.x_out.data()[k];
  EXPECT_LE(relative_linf(z, y), 1e-10);

  // Perturbing x1 moves only the first block of rows.
  auto x1b = x1;
  for (std::size_t dd = 0; dd < d; ++dd) x1b(2, dd) += 0.5;
  const auto credb = compose_sum(C(route_optimized(x1b, s1.params, s1.dims).phi), C(r2.phi));
  bool first_block_moved = false;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < n1; ++i) first_block_moved |= credb(i, k) != cred(i, k);
    for (std::size_t i = n1; i < n1 + n2; ++i) EXPECT_EQ(credb(i, k), cred(i, k));
  }
  EXPECT_TRUE(first_block_moved);
}

TEST(CompositionSoundnessTest, ConcatCreditKeepsBlocksSeparate) {
  std::mt19937_64 rng(12);
  const auto s1 = linear_stage(3, 4, 2, 600, false);
  const auto s2 = linear_stage(2, 4, 2, 601, false);
  const auto x1 = random_tensor<double>({4, 4}, rng);
  const auto x2 = random_tensor<double>({6, 4}, rng);
  const auto r1 = route_optimized(x1, s1.params, s1.dims);
  const auto r2 = route_optimized(x2, s2.params, s2.dims);
  const auto cred = compose_concat(C(r1.phi), C(r2.phi));
  for (std::size_t k = 0; k < 5; ++k) {
    DenseTensor<double> z({2});
    for (std::size_t i = 0; i < 10; ++i) {
      if (cred(i, k) == 0.0) continue;
      const auto v = i < 4 ? input_votes(x1, i, s1.params) : input_votes(x2, i - 4, s2.params);
      const std::size_t row = k < 3 ? k : k - 3;
      for (std::size_t h = 0; h < 2; ++h) z(h) += cred(i, k) * v(row, h);
    }
    for (std::size_t h = 0; h < 2; ++h) {
      const double want = k < 3 ? r1.x_out(k, h) : r2.x_out(k - 3, h);
      EXPECT_NEAR(z(h), want, 1e-10 * (1 + std::abs(want)));
    }
  }
}

}  // namespace
}  // namespace vecroute
