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

#include "vecroute/bench.hpp"

#include <sstream>

#include "gtest/gtest.h"

namespace vecroute {
namespace {

SweepSpec small_spec(SweepDim dim, std::vector<std::size_t> values) {
  SweepSpec spec;
  spec.dimension = dim;
  spec.values = std::move(values);
  spec.baseline = {32, 4, 8, 8, 2};
  spec.repeats = 3;
  return spec;
}

TEST(FitLinearTest, RecoversExactLine) {
  const auto fit = fit_linear({1, 2, 3, 4}, {5, 7, 9, 11});
  EXPECT_DOUBLE_EQ(fit.slope, 2.0);
  EXPECT_DOUBLE_EQ(fit.intercept, 3.0);
  EXPECT_DOUBLE_EQ(fit.r2, 1.0);
}

TEST(FitLinearTest, KnownNoisyFit) {
  // y = {1, 3, 2}: sxx = 2, sxy = 1, syy = 2.
  const auto fit = fit_linear({0, 1, 2}, {1, 3, 2});
  EXPECT_DOUBLE_EQ(fit.slope, 0.5);
  EXPECT_DOUBLE_EQ(fit.intercept, 1.5);
  EXPECT_DOUBLE_EQ(fit.r2, 0.25);
  EXPECT_DOUBLE_EQ(fit_linear({1, 2, 3}, {4, 4, 4}).r2, 1.0);
}

TEST(SweepTest, ParseDimension) {
  EXPECT_EQ(parse_sweep_dim("d_out"), SweepDim::d_out);
  EXPECT_THROW(parse_sweep_dim("width"), std::invalid_argument);
}

TEST(SweepTest, ParamsColumnFollowsDimension) {
  const auto iters = run_sweep(small_spec(SweepDim::n_iters, {2, 3, 5}));
  ASSERT_EQ(iters.size(), 3u);
  for (const auto& r : iters) {
    EXPECT_FALSE(r.skipped);
    EXPECT_EQ(r.params, iters[0].params);
  }
  const auto outs = run_sweep(small_spec(SweepDim::n_out, {2, 4, 8}));
  EXPECT_LT(outs[0].params, outs[1].params);
  EXPECT_LT(outs[1].params, outs[2].params);
  // Variable mode: parameter count does not depend on sequence length.
  const auto lens = run_sweep(small_spec(SweepDim::n_inp, {16, 64}));
  EXPECT_EQ(lens[0].params, lens[1].params);
  auto fixed = small_spec(SweepDim::n_inp, {16, 64});
  fixed.mode = Mode::fixed;
  const auto flens = run_sweep(fixed);
  EXPECT_LT(flens[0].params, flens[1].params);
}

TEST(SweepTest, PeakGrowsWithSequenceAndStaysUnderBound) {
  auto spec = small_spec(SweepDim::n_inp, {64, 128, 256, 512});
  const auto recs = run_sweep(spec);
  for (std::size_t k = 0; k < recs.size(); ++k) {
    std::size_t n = 0;
    const auto dims = sweep_point_dims(spec, recs[k].value, &n);
    EXPECT_GT(recs[k].peak_bytes, 0u);
    EXPECT_LE(recs[k].peak_bytes, transient_bound_elements(n, dims) * sizeof(float));
    if (k) {
      EXPECT_GT(recs[k].peak_bytes, recs[k - 1].peak_bytes);
    }
  }
}

TEST(SweepTest, SkipsPointsOverBudgetAndContinues) {
  auto spec = small_spec(SweepDim::n_inp, {16, 1 << 20, 32});
  spec.budget_bytes = 1 << 20;
  std::ostringstream csv;
  const auto recs = run_sweep(spec, &csv);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_FALSE(recs[0].skipped);
  EXPECT_TRUE(recs[1].skipped);
  EXPECT_NE(recs[1].note.find("budget"), std::string::npos);
  EXPECT_FALSE(recs[2].skipped);
  std::istringstream lines(csv.str());
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "dimension,value,params,peak_bytes,wall_ms,repeats");
  EXPECT_EQ(rows[1].rfind("n_inp,16,", 0), 0u);
  EXPECT_EQ(rows[2].rfind("n_inp,32,", 0), 0u);
}

TEST(SweepTest, InvalidPointIsSkipped) {
  const auto recs = run_sweep(small_spec(SweepDim::n_iters, {1, 2}));
  EXPECT_TRUE(recs[0].skipped);
  EXPECT_FALSE(recs[1].skipped);
  EXPECT_THROW(run_sweep(small_spec(SweepDim::n_out, {})), std::invalid_argument);
  EXPECT_THROW(run_sweep(small_spec(SweepDim::n_out, {0})), std::invalid_argument);
}

TEST(SweepTest, RoundsMultiplyTimedPasses) {
  auto spec = small_spec(SweepDim::n_out, {2, 4});
  spec.rounds = 4;
  const auto recs = run_sweep(spec);
  for (const auto& r : recs) EXPECT_EQ(r.repeats, 12u);
  EXPECT_EQ(recs[0].peak_bytes, run_sweep(small_spec(SweepDim::n_out, {2, 4}))[0].peak_bytes);
  spec.rounds = 0;
  EXPECT_THROW(run_sweep(spec), std::invalid_argument);
}

TEST(SweepTest, PeakIsDeterministic) {
  const auto spec = small_spec(SweepDim::d_inp, {8, 16});
  const auto a = run_sweep(spec), b = run_sweep(spec);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].peak_bytes, b[k].peak_bytes);
}

TEST(BigDemoTest, SmallRunFitsAndAvoidsVoteBlocks) {
  const auto r = big_route_demo(8192, 16, 8, 16, std::size_t{64} << 20);
  EXPECT_TRUE(r.vote_check_applies);
  EXPECT_EQ(r.vote_tensor_bytes, std::size_t{8192} * 8 * 16 * 4);
  EXPECT_LT(r.record.largest_block_bytes, r.vote_tensor_bytes);
  EXPECT_GT(r.record.peak_bytes, std::size_t{8192} * 16 * 4);  // holds x
}

TEST(BigDemoTest, SingleInputIsDominatedByParameters) {
  const auto r = big_route_demo(1, 4, 2, 3, std::size_t{1} << 20);
  EXPECT_FALSE(r.vote_check_applies);
  EXPECT_GE(r.record.peak_bytes, r.record.params * sizeof(float));
  EXPECT_LT(r.record.peak_bytes, 2 * r.record.params * sizeof(float));
}

TEST(BigDemoTest, PeakIsDeterministic) {
  const auto a = big_route_demo(2048, 16, 8, 16, std::size_t{64} << 20, 3);
  const auto b = big_route_demo(2048, 16, 8, 16, std::size_t{64} << 20, 3);
  EXPECT_EQ(a.record.peak_bytes, b.record.peak_bytes);
  EXPECT_EQ(a.record.largest_block_bytes, b.record.largest_block_bytes);
}

TEST(SweepTest, PeakDoesNotScaleWithVoteTensor) {
  // Raising d_out adds the same amount for every sequence length: no
  // n_inp x n_out x d_out term.
  for (std::size_t m : {4, 16}) {
    std::vector<std::size_t> extra;
    for (std::size_t n : {64, 256, 1024}) {
      std::size_t peak[2];
      for (int k = 0; k < 2; ++k) {
        auto spec = small_spec(SweepDim::d_out, {k ? std::size_t{64} : std::size_t{8}});
        spec.baseline = {n, m, 8, 8, 2};
        spec.repeats = 1;
        peak[k] = run_sweep(spec)[0].peak_bytes;
      }
      extra.push_back(peak[1] - peak[0]);
    }
    EXPECT_EQ(extra[0], extra[1]) << "n_out " << m;
    EXPECT_EQ(extra[1], extra[2]) << "n_out " << m;
    EXPECT_LT(extra[2], 1024 * m * (64 - 8) * sizeof(float));
  }
}

TEST(BigDemoTest, OverBudgetThrows) {
  EXPECT_THROW(big_route_demo(4096, 16, 8, 16, 1000), BudgetError);
  EXPECT_THROW(big_route_demo(0, 16, 8, 16, 1000), DimensionError);
}

}  // namespace
}  // namespace vecroute
