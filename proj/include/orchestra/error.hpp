// Copyright 2026 The Orchestra Authors.
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
#pragma once

#include <stdexcept>
#include <string>

namespace orchestra {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not chain.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked in the wrong object state.
class StateError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class RoutingError : public Error {
 public:
  using Error::Error;
};

class RecoveryError : public Error {
 public:
  using Error::Error;
};

class GrammarError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class StatisticsError : public Error {
 public:
  using Error::Error;
};

/// Raised by test harness hooks (failure injection) on bad targets.
class HarnessError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint / log I/O failure. kind() distinguishes the causes a caller
/// may want to react to differently.
class PersistenceError : public Error {
 public:
  enum class Kind { Io, BadMagic, UnsupportedVersion, DigestMismatch, Parse };

  PersistenceError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace orchestra
