// Copyright 2026 The maskpipe Authors
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

namespace maskpipe {

enum class ErrorCode {
  shape,
  parameter,
  format,
  corruption,
  unsupported,
  bind,
  parse,
  input,
  io,
};

const char* to_string(ErrorCode code);

/// Base of every error raised by the library. The code drives CLI exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define MASKPIPE_DEFINE_ERROR(Name, Code)                                  \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& message) : Error(Code, message) {}    \
  };

MASKPIPE_DEFINE_ERROR(ShapeError, ErrorCode::shape)
MASKPIPE_DEFINE_ERROR(ParameterError, ErrorCode::parameter)
MASKPIPE_DEFINE_ERROR(FormatError, ErrorCode::format)
MASKPIPE_DEFINE_ERROR(CorruptionError, ErrorCode::corruption)
MASKPIPE_DEFINE_ERROR(UnsupportedError, ErrorCode::unsupported)
MASKPIPE_DEFINE_ERROR(BindError, ErrorCode::bind)
MASKPIPE_DEFINE_ERROR(InputError, ErrorCode::input)
MASKPIPE_DEFINE_ERROR(IoError, ErrorCode::io)

#undef MASKPIPE_DEFINE_ERROR

/// Parse failure located at a 1-based line of the input text.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorCode::parse, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace maskpipe
