// Copyright 2026 The eXmY Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "exmy/error.hpp"

namespace exmy {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidFormat: return "InvalidFormat";
    case ErrorCode::kSpecialsNotRepresentable: return "SpecialsNotRepresentable";
    case ErrorCode::kFormatMismatch: return "FormatMismatch";
    case ErrorCode::kEmptyBlock: return "EmptyBlock";
    case ErrorCode::kMalformedBlock: return "MalformedBlock";
    case ErrorCode::kBlockShapeMismatch: return "BlockShapeMismatch";
    case ErrorCode::kUnsupportedWidth: return "UnsupportedWidth";
    case ErrorCode::kLengthNotMultipleOf8: return "LengthNotMultipleOf8";
    case ErrorCode::kRowsNotMultipleOf8: return "RowsNotMultipleOf8";
    case ErrorCode::kCodeOutOfRange: return "CodeOutOfRange";
    case ErrorCode::kSizeMismatch: return "SizeMismatch";
    case ErrorCode::kUnalignedShard: return "UnalignedShard";
    case ErrorCode::kCorruptContainer: return "CorruptContainer";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kEmptyHistogram: return "EmptyHistogram";
    case ErrorCode::kBudgetUnsatisfiable: return "BudgetUnsatisfiable";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace exmy
