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

#ifndef DROPTRIPLE_ERROR_HPP_
#define DROPTRIPLE_ERROR_HPP_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace droptriple {

enum class ErrorCode {
  kZeroVector,
  kDimensionMismatch,
  kNonUnitRows,
  kInvalidRange,
  kOddDimension,
  kTokenOutOfRange,
  kStaleCache,
  kInvalidConfig,
  kInvalidBatch,
  kIoError,
  kFormatVersionMismatch,
  kCorruptRecord,
  kShapeMismatch,
  kEmptySplit,
  kMissingRelevance,
  kEmptyRanks,
  kMissingK,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported as Error. CorruptRecord errors carry the
// zero-based index of the record that failed to parse.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  Error(ErrorCode code, const std::string& message, std::size_t record_index);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> record_index() const noexcept {
    return record_index_;
  }

 private:
  ErrorCode code_;
  std::optional<std::size_t> record_index_;
};

}  // namespace droptriple

#endif  // DROPTRIPLE_ERROR_HPP_
