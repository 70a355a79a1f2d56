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

// Routes two stacked layers and prints how much each block of input vectors
// contributes to each final output vector.

#include <cstdio>
#include <iostream>

#include "vecroute/vecroute.hpp"

int main() {
  using namespace vecroute;

  RoutingDims layer1;  // variable-length: any number of input vectors
  layer1.n_out = 8;
  layer1.d_inp = 32;
  layer1.d_out = 16;
  layer1.n_iters = 3;

  RoutingDims layer2 = layer1;
  layer2.n_out = 4;
  layer2.d_inp = 16;
  layer2.d_out = 16;

  const auto p1 = init_params(layer1, 1);
  const auto p2 = init_params(layer2, 2);
  const DenseTensor<float> x = random_inputs(12, layer1.d_inp, 3);

  const auto r1 = route_optimized(x, p1, layer1);
  const auto r2 = route_optimized(r1.x_out, p2, layer2);
  std::printf("output vectors: %zu x %zu\n", r2.x_out.extent(0), r2.x_out.extent(1));

  const auto credit = compose_sequential(CreditMatrix<float>(r1.phi), CreditMatrix<float>(r2.phi));
  const auto report = attribution_report(credit, {{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9, 10, 11}});
  report.write_csv(std::cout);
  return 0;
}
