// Copyright 2026 The droptriple Authors.
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

#include "droptriple/error.hpp"

namespace droptriple {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonUnitRows: return "NonUnitRows";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kOddDimension: return "OddDimension";
    case ErrorCode::kTokenOutOfRange: return "TokenOutOfRange";
    case ErrorCode::kStaleCache: return "StaleCache";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidBatch: return "InvalidBatch";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kFormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::kCorruptRecord: return "CorruptRecord";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptySplit: return "EmptySplit";
    case ErrorCode::kMissingRelevance: return "MissingRelevance";
    case ErrorCode::kEmptyRanks: return "EmptyRanks";
    case ErrorCode::kMissingK: return "MissingK";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

Error::Error(ErrorCode code, const std::string& message,
             std::size_t record_index)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": record " +
                         std::to_string(record_index) + ": " + message),
      code_(code),
      record_index_(record_index) {}

}  // namespace droptriple
