// Copyright 2026 The flexconv Authors
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
#include <string_view>

namespace flexconv {

enum class ErrorKind {
  ShapeMismatch,
  IndexOutOfRange,
  NonFinite,
  EmptyInput,
  ConfigInvalid,
  IoFailure,
};

std::string_view to_string(ErrorKind kind);

/// The single exception type thrown by every public operation. Callers branch
/// on kind(); the message is for humans.
class EngineError : public std::runtime_error {
 public:
  EngineError(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const char* message) {
  if (!condition) fail(kind, message);
}

/// Prefer `if (!cond) fail(...)` in hot loops: this overload builds its
/// message before the check.
inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace flexconv
