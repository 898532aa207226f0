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

#include "reggap/error.hpp"

namespace reggap {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::EmptyDimension: return "EmptyDimension";
    case ErrorCode::NonBinaryMask: return "NonBinaryMask";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::OverlappingRegions: return "OverlappingRegions";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::ParserFailure: return "ParserFailure";
    case ErrorCode::NoFaceFound: return "NoFaceFound";
    case ErrorCode::DetectorFailure: return "DetectorFailure";
    case ErrorCode::ShapeContractViolation: return "ShapeContractViolation";
    case ErrorCode::ModelLoadFailure: return "ModelLoadFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MissingImage: return "MissingImage";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::CacheIntegrity: return "CacheIntegrity";
    case ErrorCode::IncompatibleCheckpoint: return "IncompatibleCheckpoint";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NoFaceFound:
      return 2;
    case ErrorCode::ModelLoadFailure:
      return 3;
    case ErrorCode::MalformedRow:
    case ErrorCode::DuplicateId:
    case ErrorCode::MissingImage:
    case ErrorCode::EmptyDataset:
    case ErrorCode::CacheIntegrity:
    case ErrorCode::IncompatibleCheckpoint:
    case ErrorCode::UnknownLabel:
      return 4;
    default:
      return 1;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace reggap
