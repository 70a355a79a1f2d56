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

#ifndef VECROUTE_BENCH_HPP_
#define VECROUTE_BENCH_HPP_

// Scaling sweeps of the optimized router: one dimension varies while the
// others stay at a baseline. Each point records parameter count, peak
// transient tensor memory (from the allocation accounting in alloc.hpp) and
// the median wall time of forward passes with trace capture off.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "vecroute/alloc.hpp"
#include "vecroute/errors.hpp"
#include "vecroute/optimized_router.hpp"
#include "vecroute/params.hpp"
#include "vecroute/params_io.hpp"

namespace vecroute {

enum class SweepDim { n_inp, n_out, d_inp, d_out, n_iters };

inline const char* to_string(SweepDim d) {
  switch (d) {
    case SweepDim::n_inp: return "n_inp";
    case SweepDim::n_out: return "n_out";
    case SweepDim::d_inp: return "d_inp";
    case SweepDim::d_out: return "d_out";
    case SweepDim::n_iters: return "n_iters";
  }
  return "?";
}

inline SweepDim parse_sweep_dim(const std::string& s) {
  for (SweepDim d : {SweepDim::n_inp, SweepDim::n_out, SweepDim::d_inp, SweepDim::d_out,
                     SweepDim::n_iters}) {
    if (s == to_string(d)) return d;
  }
  throw std::invalid_argument("unknown sweep dimension '" + s + "'");
}

struct SweepBaseline {
  std::size_t n_inp = 1024;
  std::size_t n_out = 64;
  std::size_t d_inp = 64;
  std::size_t d_out = 64;
  std::size_t n_iters = 2;
};

struct SweepSpec {
  SweepDim dimension = SweepDim::n_inp;
  std::vector<std::size_t> values;
  SweepBaseline baseline;
  std::size_t repeats = 5;
  // Passes over the whole value list. Each round times every point
  // `repeats` times, so slow drift in machine speed is spread over all points.
  std::size_t rounds = 1;
  std::uint64_t seed = 0;
  std::size_t budget_bytes = std::size_t{4} << 30;
  Mode mode = Mode::variable;

  void validate() const {
    if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
    if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
    if (rounds < 1) throw std::invalid_argument("rounds must be at least 1");
    for (std::size_t v : values) {
      if (v == 0) throw std::invalid_argument("sweep values must be positive");
    }
  }
};

struct BenchRecord {
  std::string dimension;
  std::size_t value = 0;
  std::size_t params = 0;
  std::size_t peak_bytes = 0;
  double wall_ms = 0.0;
  std::size_t repeats = 0;
  std::size_t largest_block_bytes = 0;
  bool skipped = false;
  std::string note;
};

inline void write_csv_header(std::ostream& os) {
  os << "dimension,value,params,peak_bytes,wall_ms,repeats\n";
}

inline void write_csv_row(std::ostream& os, const BenchRecord& r) {
  os << r.dimension << ',' << r.value << ',' << r.params << ',' << r.peak_bytes << ','
     << r.wall_ms << ',' << r.repeats << '\n';
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = slope x + intercept.
inline LinearFit fit_linear(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = double(xs.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  // A constant series is fitted exactly by a flat line.
  fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

inline DenseTensor<float> random_inputs(std::size_t n_inp, std::size_t d_inp, std::uint64_t seed) {
  DenseTensor<float> x({n_inp, d_inp});
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  for (float& v : x.values()) v = dist(rng);
  return x;
}

inline RoutingDims sweep_point_dims(const SweepSpec& spec, std::size_t value,
                                    std::size_t* n_inp_out) {
  SweepBaseline b = spec.baseline;
  switch (spec.dimension) {
    case SweepDim::n_inp: b.n_inp = value; break;
    case SweepDim::n_out: b.n_out = value; break;
    case SweepDim::d_inp: b.d_inp = value; break;
    case SweepDim::d_out: b.d_out = value; break;
    case SweepDim::n_iters: b.n_iters = value; break;
  }
  *n_inp_out = b.n_inp;
  RoutingDims dims;
  if (spec.mode == Mode::fixed) dims.n_inp = b.n_inp;
  dims.n_out = b.n_out;
  dims.d_inp = b.d_inp;
  dims.d_out = b.d_out;
  dims.n_iters = b.n_iters;
  return dims;
}

namespace detail {

// Times `repeats` untraced passes of one sweep point after a warm-up pass.
inline void time_point(const SweepSpec& spec, const RoutingDims& dims, std::size_t n_inp,
                       BenchRecord& rec, std::vector<double>& times) {
  const RoutingParams<float> params = init_params(dims, spec.seed);
  const DenseTensor<float> x = random_inputs(n_inp, dims.d_inp, spec.seed + 1);
  (void)route_optimized(x, params, dims);  // warm-up
  for (std::size_t r = 0; r < spec.repeats; ++r) {
    PeakScope scope;
    const auto start = std::chrono::steady_clock::now();
    const RouteResult<float> out = route_optimized(x, params, dims);
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    rec.peak_bytes = std::max(rec.peak_bytes, scope.peak_bytes());
    rec.largest_block_bytes = std::max(rec.largest_block_bytes, scope.largest_block_bytes());
  }
}

}  // namespace detail

/// Runs one record per sweep value. Points whose transient bound exceeds
/// the budget are skipped and flagged; the sweep continues. Rows of points
/// that ran are written to `csv` if given.
inline std::vector<BenchRecord> run_sweep(const SweepSpec& spec, std::ostream* csv = nullptr) {
  spec.validate();
  std::vector<BenchRecord> records;
  std::vector<RoutingDims> point_dims(spec.values.size());
  std::vector<std::size_t> point_n(spec.values.size(), 0);
  for (std::size_t k = 0; k < spec.values.size(); ++k) {
    BenchRecord rec;
    rec.dimension = to_string(spec.dimension);
    rec.value = spec.values[k];
    rec.repeats = spec.repeats * spec.rounds;
    try {
      point_dims[k] = sweep_point_dims(spec, rec.value, &point_n[k]);
      point_dims[k].validate();
    } catch (const DimensionError& e) {
      rec.skipped = true;
      rec.note = e.what();
      records.push_back(rec);
      continue;
    }
    rec.params = total_param_count(point_dims[k]);
    const std::size_t bound = transient_bound_elements(point_n[k], point_dims[k]) * sizeof(float);
    if (bound > spec.budget_bytes) {
      rec.skipped = true;
      rec.note = "transient bound " + std::to_string(bound) + " bytes exceeds budget";
    }
    records.push_back(rec);
  }

  std::vector<std::vector<double>> times(records.size());
  for (std::size_t round = 0; round < spec.rounds; ++round) {
    for (std::size_t k = 0; k < records.size(); ++k) {
      if (!records[k].skipped) detail::time_point(spec, point_dims[k], point_n[k], records[k], times[k]);
    }
  }

  if (csv) write_csv_header(*csv);
  for (std::size_t k = 0; k < records.size(); ++k) {
    BenchRecord& rec = records[k];
    if (rec.skipped) continue;
    std::vector<double>& t = times[k];
    std::sort(t.begin(), t.end());
    const std::size_t mid = t.size() / 2;
    rec.wall_ms = t.size() % 2 ? t[mid] : 0.5 * (t[mid - 1] + t[mid]);
    if (rec.peak_bytes > spec.budget_bytes) {
      rec.skipped = true;
      rec.note = "measured peak exceeds budget";
    }
    if (csv && !rec.skipped) write_csv_row(*csv, rec);
  }
  return records;
}

struct DemoResult {
  BenchRecord record;
  std::size_t vote_tensor_bytes = 0;  // size a materialized V would need
  bool vote_check_applies = false;    // V is bigger than every legitimate tensor
};

/// One variable-length forward pass (n_iters = 2) over n_inp random input
/// vectors. Peak memory counts parameters, inputs and transients. Throws
/// BudgetError if the measured peak exceeds `budget_bytes`, or if any single
/// block as large as a vote tensor was allocated.
inline DemoResult big_route_demo(std::size_t n_inp, std::size_t d_inp, std::size_t n_out,
                                 std::size_t d_out, std::size_t budget_bytes,
                                 std::uint64_t seed = 0) {
  RoutingDims dims;
  dims.n_out = n_out;
  dims.d_inp = d_inp;
  dims.d_out = d_out;
  dims.n_iters = 2;
  dims.validate();
  if (n_inp == 0) throw DimensionError("n_inp must be positive");

  DemoResult result;
  result.vote_tensor_bytes = n_inp * n_out * d_out * sizeof(float);
  const std::size_t v_elems = n_inp * n_out * d_out;
  const std::size_t legit = std::max({n_inp * d_inp, n_inp * n_out, n_out * d_inp, n_out * d_out,
                                      d_inp * d_out});
  result.vote_check_applies = v_elems > legit;

  const std::size_t predicted =
      (transient_bound_elements(n_inp, dims) + total_param_count(dims)) * sizeof(float);
  if (predicted > budget_bytes) {
    throw BudgetError("predicted peak " + std::to_string(predicted) + " bytes exceeds budget " +
                      std::to_string(budget_bytes));
  }

  BenchRecord& rec = result.record;
  rec.dimension = "n_inp";
  rec.value = n_inp;
  rec.params = total_param_count(dims);
  rec.repeats = 1;
  {
    PeakScope scope;
    const auto start = std::chrono::steady_clock::now();
    const RoutingParams<float> params = init_params(dims, seed);
    const DenseTensor<float> x = random_inputs(n_inp, d_inp, seed + 1);
    const RouteResult<float> out = route_optimized(x, params, dims);
    const auto stop = std::chrono::steady_clock::now();
    rec.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    rec.peak_bytes = scope.peak_bytes();
    rec.largest_block_bytes = scope.largest_block_bytes();
  }
  if (rec.peak_bytes > budget_bytes) {
    throw BudgetError("measured peak " + std::to_string(rec.peak_bytes) +
                      " bytes exceeds budget " + std::to_string(budget_bytes));
  }
  if (result.vote_check_applies && rec.largest_block_bytes >= result.vote_tensor_bytes) {
    throw BudgetError("a block of " + std::to_string(rec.largest_block_bytes) +
                      " bytes was allocated; a vote tensor needs " +
                      std::to_string(result.vote_tensor_bytes));
  }
  return result;
}

}  // namespace vecroute

#endif  // VECROUTE_BENCH_HPP_
