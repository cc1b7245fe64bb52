/*
 * Copyright 2026 The durel-kit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace durel {

/// Base class of all errors raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file does not follow its format. Line numbers are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(position(line, column) + what), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string position(std::size_t line, std::size_t column) {
    if (line == 0) return {};
    std::string p = "line " + std::to_string(line);
    if (column != 0) p += ", column " + std::to_string(column);
    return p + ": ";
  }

  std::size_t line_;
  std::size_t column_;
};

/// Well-formed input that violates a domain rule (unknown id, range, duplicate...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A sampling pool cannot produce the requested number of pairs.
class InsufficientUsesError : public ValidationError {
 public:
  InsufficientUsesError(const std::string& target, const std::string& group,
                        const std::string& detail)
      : ValidationError("insufficient uses for target '" + target + "' in group " +
                        group + ": " + detail),
        target_(target),
        group_(group) {}

  const std::string& target() const noexcept { return target_; }
  const std::string& group() const noexcept { return group_; }

 private:
  std::string target_;
  std::string group_;
};

/// A measure was requested whose underlying group mean is undefined.
class UndefinedMeasureError : public Error {
 public:
  using Error::Error;
};

/// A rank correlation cannot be computed (too little overlap or no variance).
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

class InsufficientOverlapError : public UndefinedCorrelationError {
 public:
  using UndefinedCorrelationError::UndefinedCorrelationError;
};

class ZeroVarianceError : public UndefinedCorrelationError {
 public:
  using UndefinedCorrelationError::UndefinedCorrelationError;
};

/// Two judgments for the same (annotator, pair) disagree under the reject policy.
class ConflictError : public ValidationError {
 public:
  ConflictError(const std::string& what, int stored_value)
      : ValidationError(what), stored_value_(stored_value) {}

  int stored_value() const noexcept { return stored_value_; }

 private:
  int stored_value_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace durel
