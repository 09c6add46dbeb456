// Copyright 2026 The ArtContext Authors.
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

#ifndef ARTCONTEXT_ERROR_HPP_
#define ARTCONTEXT_ERROR_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace artcontext {

enum class ErrorCode {
  kValidation,
  kIO,
  kFormat,
  kUnsupportedVersion,
  kNetwork,
  kRateLimited,
  kMalformedResponse,
  kZeroVector,
  kProvider,
  kEmptyCandidates,
  kAllDegenerate,
  kNoContexts,
  kRankTooLarge,
  kDimMismatch,
  kBatchTooSmall,
  kInsufficientData,
  kNoPositives,
  kEmptyInput,
  kGridMismatch,
  kStaleInput,
  kStageFailure,
  kUnknownPainting,
};

std::string_view ErrorCodeName(ErrorCode code);

// Process exit status for the CLI: 1 validation, 2 stage failure, 3 I/O.
int ExitStatusFor(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when a binary artifact fails to parse; offset is the byte position
// at which the reader gave up.
class FormatError : public Error {
 public:
  FormatError(std::uint64_t offset, const std::string& message);
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace artcontext

#endif  // ARTCONTEXT_ERROR_HPP_
