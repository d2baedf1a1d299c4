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

#include "cam/error.hpp"

#include <string>

namespace cam {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
      return "not-found";
    case ErrorCode::kSchema:
      return "schema";
    case ErrorCode::kMalformed:
      return "malformed";
    case ErrorCode::kMissingMeaning:
      return "missing-meaning";
    case ErrorCode::kDegenerateVector:
      return "degenerate-vector";
    case ErrorCode::kUnfittableColumn:
      return "unfittable-column";
    case ErrorCode::kLabel:
      return "label";
    case ErrorCode::kMisaligned:
      return "misaligned";
    case ErrorCode::kStructure:
      return "structure";
    case ErrorCode::kUndefinedMetric:
      return "undefined-metric";
    case ErrorCode::kConfig:
      return "config";
    case ErrorCode::kIo:
      return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error("[" + std::string(ErrorCodeName(code)) + "] " +
                         message),
      code_(code) {}

}  // namespace cam
