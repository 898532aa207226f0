// Copyright 2026 The reggap Authors
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

#ifndef REGGAP_ERROR_HPP
#define REGGAP_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace reggap {

enum class ErrorCode {
  // core types
  NonFiniteValue,
  EmptyDimension,
  NonBinaryMask,
  ShapeMismatch,
  OverlappingRegions,
  // segmentation
  UnknownLabel,
  ParserFailure,
  // backbone
  NoFaceFound,
  DetectorFailure,
  ShapeContractViolation,
  ModelLoadFailure,
  // regression head
  DimensionMismatch,
  EmptyDataset,
  NonFiniteLoss,
  InvalidConfig,
  // evaluation
  LengthMismatch,
  EmptyInput,
  ZeroVariance,
  NonFinite,
  // dataset
  MalformedRow,
  DuplicateId,
  MissingImage,
  // files and caches
  IoFailure,
  CacheIntegrity,
  IncompatibleCheckpoint,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Process exit code for an error that escapes a CLI stage:
/// 2 NoFaceFound, 3 model load failure, 4 data/manifest error, 1 otherwise.
int exit_code_for(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace reggap

#endif  // REGGAP_ERROR_HPP
