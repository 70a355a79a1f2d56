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

#ifndef VECROUTE_ERRORS_HPP_
#define VECROUTE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace vecroute {

// Shape or arity mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A NaN or Inf appeared in an intermediate value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Credit matrices that cannot be composed or normalized.
class CreditError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed, truncated or corrupted parameter file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A benchmark point exceeded its configured memory budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vecroute

#endif  // VECROUTE_ERRORS_HPP_
