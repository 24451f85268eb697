// Copyright 2026 The Amazons Hybrid Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace amazons {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define AMAZONS_DEFINE_ERROR(Name, Base) \
  class Name : public Base {             \
   public:                               \
    using Base::Base;                    \
  }

// Rules engine.
AMAZONS_DEFINE_ERROR(IllegalMove, Error);
AMAZONS_DEFINE_ERROR(ParseError, Error);
AMAZONS_DEFINE_ERROR(NoLegalMoves, Error);

// Numerics and persistence.
AMAZONS_DEFINE_ERROR(DimensionMismatch, Error);
AMAZONS_DEFINE_ERROR(AsymmetricAdjacency, Error);
AMAZONS_DEFINE_ERROR(IoError, Error);
AMAZONS_DEFINE_ERROR(VersionMismatch, Error);
AMAZONS_DEFINE_ERROR(ChecksumMismatch, Error);

// Search and genetic sampling.
AMAZONS_DEFINE_ERROR(EmptyTree, Error);
AMAZONS_DEFINE_ERROR(TargetIsHead, Error);
AMAZONS_DEFINE_ERROR(AlreadyPropagated, Error);

// LLM labelling. OutOfRange is a ParseError so that it is retried.
AMAZONS_DEFINE_ERROR(OutOfRange, ParseError);
AMAZONS_DEFINE_ERROR(RatingUnavailable, Error);
AMAZONS_DEFINE_ERROR(AuthError, Error);
AMAZONS_DEFINE_ERROR(RateLimited, Error);

// Training and statistics.
AMAZONS_DEFINE_ERROR(EmptyDataset, Error);
AMAZONS_DEFINE_ERROR(InsufficientData, Error);

// Arena.
AMAZONS_DEFINE_ERROR(AgentFailure, Error);

#undef AMAZONS_DEFINE_ERROR

}  // namespace amazons
