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

// Saves a parameter record, loads it back and checks both give the same
// routing.

#include <cstdio>
#include <filesystem>

#include "vecroute/vecroute.hpp"

int main(int argc, char** argv) {
  using namespace vecroute;
  const std::filesystem::path path =
      argc > 1 ? argv[1] : std::filesystem::temp_directory_path() / "vecroute_sample.params";

  RoutingDims dims;
  dims.n_inp = 10;  // fixed-length: per-input parameters
  dims.n_out = 5;
  dims.d_inp = 12;
  dims.d_out = 6;
  dims.n_iters = 2;

  const auto params = init_params(dims, 42);
  save(params, dims, path);
  const LoadedParams loaded = load(path);

  const auto x = random_inputs(10, 12, 7);
  const auto a = route_optimized(x, params, dims);
  const auto b = route_optimized(x, loaded.params, loaded.dims);
  std::printf("%s: %zu parameters, outputs %s\n", path.c_str(), params.element_count(),
              a.x_out == b.x_out ? "identical" : "differ");
  std::filesystem::remove(path);
  return a.x_out == b.x_out ? 0 : 1;
}
