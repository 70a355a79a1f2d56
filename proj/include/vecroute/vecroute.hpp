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

#ifndef VECROUTE_VECROUTE_HPP_
#define VECROUTE_VECROUTE_HPP_

#include "vecroute/alloc.hpp"
#include "vecroute/bench.hpp"
#include "vecroute/concrete_networks.hpp"
#include "vecroute/credit.hpp"
#include "vecroute/errors.hpp"
#include "vecroute/optimized_router.hpp"
#include "vecroute/params.hpp"
#include "vecroute/params_io.hpp"
#include "vecroute/reference_router.hpp"
#include "vecroute/routing.hpp"
#include "vecroute/tensor.hpp"

#endif  // VECROUTE_VECROUTE_HPP_
