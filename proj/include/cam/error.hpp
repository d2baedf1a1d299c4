/*
 * Copyright 2026 The CAM Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cam {

enum class ErrorCode {
  kNotFound,
  kSchema,
  kMalformed,
  kMissingMeaning,
  kDegenerateVector,
  kUnfittableColumn,
  kLabel,
  kMisaligned,
  kStructure,
  kUndefinedMetric,
  kConfig,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every recoverable failure in the library is reported as a cam::Error. The
// code is stable and shows up as a bracketed tag in what().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cam
