// Copyright 2026 The natproj Authors
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

#include "natproj/error.hpp"

namespace natproj {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonPositive: return "NonPositive";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::HorizonZero: return "HorizonZero";
    case ErrorCode::DtMismatch: return "DtMismatch";
    case ErrorCode::EmptyEnforcementSet: return "EmptyEnforcementSet";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonContiguousFrames: return "NonContiguousFrames";
    case ErrorCode::BadProportion: return "BadProportion";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace natproj
