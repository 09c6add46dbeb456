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

#include "artcontext/error.hpp"

namespace artcontext {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kIO: return "IOError";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kNetwork: return "NetworkError";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kProvider: return "ProviderError";
    case ErrorCode::kEmptyCandidates: return "EmptyCandidates";
    case ErrorCode::kAllDegenerate: return "AllDegenerate";
    case ErrorCode::kNoContexts: return "NoContexts";
    case ErrorCode::kRankTooLarge: return "RankTooLarge";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kBatchTooSmall: return "BatchTooSmall";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kNoPositives: return "NoPositives";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kGridMismatch: return "GridMismatch";
    case ErrorCode::kStaleInput: return "StaleInput";
    case ErrorCode::kStageFailure: return "StageFailure";
    case ErrorCode::kUnknownPainting: return "UnknownPainting";
  }
  return "Error";
}

int ExitStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIO:
    case ErrorCode::kFormat:
    case ErrorCode::kUnsupportedVersion:
      return 3;
    case ErrorCode::kNetwork:
    case ErrorCode::kRateLimited:
    case ErrorCode::kMalformedResponse:
    case ErrorCode::kProvider:
    case ErrorCode::kEmptyCandidates:
    case ErrorCode::kAllDegenerate:
    case ErrorCode::kNoContexts:
    case ErrorCode::kStageFailure:
      return 2;
    default:
      return 1;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

FormatError::FormatError(std::uint64_t offset, const std::string& message)
    : Error(ErrorCode::kFormat,
            message + " (at byte offset " + std::to_string(offset) + ")"),
      offset_(offset) {}

}  // namespace artcontext
