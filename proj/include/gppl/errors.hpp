/*
 * Copyright 2026 The gppl authors.
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

#ifndef GPPL_ERRORS_HPP
#define GPPL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gppl {

/// Bad input: missing file, malformed row, mismatched ids, violated
/// precondition. The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: Cholesky breakdown after jitter retries, non-finite
/// objective, degenerate inputs. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gppl

#endif  // GPPL_ERRORS_HPP
