// Copyright 2026 The lmfield Authors.
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

#ifndef LMFIELD_ERRORS_HPP_
#define LMFIELD_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace lmfield {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller supplied arguments that violate an operation's preconditions
// (mismatched dimensions, out-of-range parameters).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable file contents.
class FormatError : public Error {
 public:
  enum class Kind {
    kBadMagic,
    kUnsupportedVersion,
    kTruncated,
    kDimensionOverflow,
    kTrailingData,
    kSchema,
  };

  FormatError(Kind kind, std::string message, std::string path = {})
      : Error(std::move(message)), kind_(kind), path_(std::move(path)) {}

  Kind kind() const noexcept { return kind_; }
  // JSON pointer (or file path) locating the offending element, if known.
  const std::string& path() const noexcept { return path_; }

 private:
  Kind kind_;
  std::string path_;
};

const char* to_string(FormatError::Kind kind) noexcept;

// Singular or ill-conditioned systems and other numerical breakdowns.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures (missing input, unwritable output).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lmfield

#endif  // LMFIELD_ERRORS_HPP_
