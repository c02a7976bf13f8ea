// Copyright 2026 The SM3 Optimizer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SM3_ERROR_H_
#define SM3_ERROR_H_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sm3 {

enum class ErrorCode {
  kShapeMismatch,
  kLengthMismatch,
  kDivisionByZero,
  kNonFinite,
  kNonFiniteGradient,
  kAxisOutOfRange,
  kEmptyAxes,
  kEmptySet,
  kUncoveredIndex,
  kIndexOutOfRange,
  kInvalidSchedule,
  kInvalidConfig,
  kInconsistentDimensions,
  kInvariantViolation,
  kParse,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported as sm3::Error. `index()` carries the
// offending set / parameter / axis index (0-based) when one applies.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(message), code_(code), index_(index) {}

  ErrorCode code() const { return code_; }
  std::optional<std::size_t> index() const { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

}  // namespace sm3

#endif  // SM3_ERROR_H_
