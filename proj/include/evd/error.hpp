// Copyright 2026 The evdenoise Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evd {

// Coarse failure category; the CLI maps it to its exit code.
enum class ErrorKind {
  Validation = 1,  // malformed input, parse errors, bad configuration
  Domain = 2,      // well-formed input the algorithms cannot handle
  Internal = 3,    // invariant violations inside the library
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class OutOfBounds : public Error {
 public:
  explicit OutOfBounds(std::size_t index)
      : Error(ErrorKind::Validation, "event " + std::to_string(index) + " lies outside the sensor"),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class NegativePolarityEncoding : public Error {
 public:
  explicit NegativePolarityEncoding(std::size_t index)
      : Error(ErrorKind::Validation,
              "event " + std::to_string(index) + " has polarity outside {-1, +1}") {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& where, const std::string& msg)
      : Error(ErrorKind::Validation, "parse error at " + where + ": " + msg) {}
};

class MagicMismatch : public Error {
 public:
  explicit MagicMismatch(const std::string& expected)
      : Error(ErrorKind::Validation, "bad magic, expected '" + expected + "'") {}
};

class TruncatedFile : public Error {
 public:
  explicit TruncatedFile(const std::string& path)
      : Error(ErrorKind::Validation, "truncated file: " + path) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(ErrorKind::Validation, msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(ErrorKind::Validation, msg) {}
};

class MissingCheckpoint : public Error {
 public:
  explicit MissingCheckpoint(const std::string& path)
      : Error(ErrorKind::Validation, "checkpoint not found: " + path) {}
};

class DegenerateScene : public Error {
 public:
  DegenerateScene() : Error(ErrorKind::Domain, "scene produces no intensity change") {}
};

class ZeroVariance : public Error {
 public:
  ZeroVariance() : Error(ErrorKind::Domain, "window timestamps have zero variance") {}
};

class NoEligibleEvents : public Error {
 public:
  NoEligibleEvents() : Error(ErrorKind::Domain, "no eligible events to sample from") {}
};

class EmptyStream : public Error {
 public:
  EmptyStream() : Error(ErrorKind::Domain, "stream has no surviving events") {}
};

class DivergenceDetected : public Error {
 public:
  explicit DivergenceDetected(std::size_t epoch)
      : Error(ErrorKind::Domain, "training loss became non-finite in epoch " + std::to_string(epoch)) {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& msg) : Error(ErrorKind::Internal, "shape mismatch: " + msg) {}
};

}  // namespace evd
