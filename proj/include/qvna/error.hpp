// Copyright 2026 The qvna Authors
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
#include <utility>

namespace qvna {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An operation was called on data of the wrong kind (e.g. wrong frame).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// The ODE integrator failed (step underflow, non-finite state).
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// Sampled transfer functions defined on different frequency grids.
class GridError : public Error {
 public:
  using Error::Error;
};

/// Evaluation requested outside the frequency coverage of a sampled response.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// Division by a response whose amplitude is below the floor.
class DivisionFloorError : public Error {
 public:
  using Error::Error;
};

/// Sampling grid cannot satisfy the resolution requirements.
class SizingError : public Error {
 public:
  using Error::Error;
};

/// The record carries no observable rotation.
class RankError : public Error {
 public:
  using Error::Error;
};

/// Every point of a sweep failed, or the sweep request itself is invalid.
class SweepError : public Error {
 public:
  using Error::Error;
};

/// Nonlinear least squares did not converge.
class FitError : public Error {
 public:
  using Error::Error;
};

/// A configuration value violates a precondition; the message carries the
/// offending field path.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage failed; wraps the underlying message with a stage tag.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace qvna
