// Copyright 2026 The TDP Authors. All rights reserved.
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

#ifndef TDP_ERRORS_H_
#define TDP_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tdp {

// Base of every error raised by the platform. The CLI maps subclasses to
// distinct exit codes through exit_code().
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual int exit_code() const { return 1; }
};

// Malformed input text (frame DSL or JSON). `offset` is a byte offset into
// the offending text when known.
class ParseError : public Error {
 public:
  static constexpr std::size_t kNoOffset = static_cast<std::size_t>(-1);

  explicit ParseError(const std::string& what, std::size_t offset = kNoOffset)
      : Error(offset == kNoOffset
                  ? what
                  : what + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }
  int exit_code() const override { return 3; }

 private:
  std::size_t offset_;
};

class SchemaError : public Error {
 public:
  SchemaError(const std::string& field, const std::string& what)
      : Error("schema field '" + field + "': " + what), field_(field) {}
  const std::string& field() const { return field_; }
  int exit_code() const override { return 4; }

 private:
  std::string field_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
  int exit_code() const override { return 5; }
};

class KbFormatError : public Error {
 public:
  KbFormatError(std::size_t record, const std::string& what)
      : Error("kb record " + std::to_string(record) + ": " + what),
        record_(record) {}
  std::size_t record() const { return record_; }
  int exit_code() const override { return 6; }

 private:
  std::size_t record_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
  int exit_code() const override { return 7; }
};

class GoalError : public Error {
 public:
  explicit GoalError(const std::string& what) : Error(what) {}
  int exit_code() const override { return 8; }
};

class EmptyGoalSet : public GoalError {
 public:
  EmptyGoalSet() : GoalError("goal database is empty") {}
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error(what) {}
  int exit_code() const override { return 9; }
};

class TrainingDiverged : public Error {
 public:
  explicit TrainingDiverged(const std::string& what) : Error(what) {}
  int exit_code() const override { return 10; }
};

class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& what) : Error(what) {}
  int exit_code() const override { return 11; }
};

class EmptyReport : public Error {
 public:
  EmptyReport() : Error("report requires at least one metrics entry") {}
  int exit_code() const override { return 12; }
};

}  // namespace tdp

#endif  // TDP_ERRORS_H_
