// Copyright 2026 The adscreen Authors.
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

#include "adscreen/error.hpp"

namespace adscreen {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSpeakerMismatch: return "SpeakerMismatch";
    case ErrorCode::kTimeOrderViolation: return "TimeOrderViolation";
    case ErrorCode::kZeroMass: return "ZeroMass";
    case ErrorCode::kInvalidDistribution: return "InvalidDistribution";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptySequence: return "EmptySequence";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kFormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::kWrongArity: return "WrongArity";
    case ErrorCode::kAlignmentError: return "AlignmentError";
    case ErrorCode::kEmptyBlock: return "EmptyBlock";
    case ErrorCode::kEmptyUtterance: return "EmptyUtterance";
    case ErrorCode::kClockRegression: return "ClockRegression";
    case ErrorCode::kProtocolViolation: return "ProtocolViolation";
    case ErrorCode::kBindError: return "BindError";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace adscreen
