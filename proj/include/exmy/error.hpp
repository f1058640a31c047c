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

#ifndef EXMY_ERROR_HPP_
#define EXMY_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace exmy {

enum class ErrorCode {
  kInvalidFormat,
  kSpecialsNotRepresentable,
  kFormatMismatch,
  kEmptyBlock,
  kMalformedBlock,
  kBlockShapeMismatch,
  kUnsupportedWidth,
  kLengthNotMultipleOf8,
  kRowsNotMultipleOf8,
  kCodeOutOfRange,
  kSizeMismatch,
  kUnalignedShard,
  kCorruptContainer,
  kIoError,
  kBadMagic,
  kUnsupportedVersion,
  kChecksumMismatch,
  kEmptyHistogram,
  kBudgetUnsatisfiable,
  kInvalidArgument,
};

// Stable diagnostic name, e.g. "ChecksumMismatch".
std::string_view to_string(ErrorCode code);

// All library failures are reported through this exception. The code is
// part of the contract; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace exmy

#endif  // EXMY_ERROR_HPP_
