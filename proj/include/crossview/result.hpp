/* Copyright 2026 The crossview Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef CROSSVIEW_RESULT_HPP_
#define CROSSVIEW_RESULT_HPP_

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace crossview {

enum class ErrorCode {
  kBehindCamera,
  kEmptyFrustum,
  kMergeRejected,
  kDegenerateExtent,
  kMismatchedDims,
  kMissingEmbedding,
  kMissingTruth,
  kNoOverlap,
  kTooFewPoints,
  kNoMatches,
  kInvalidArgument,
  kSchema,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kEmptyFrustum: return "EmptyFrustum";
    case ErrorCode::kMergeRejected: return "MergeRejected";
    case ErrorCode::kDegenerateExtent: return "DegenerateExtent";
    case ErrorCode::kMismatchedDims: return "MismatchedDims";
    case ErrorCode::kMissingEmbedding: return "MissingEmbedding";
    case ErrorCode::kMissingTruth: return "MissingTruth";
    case ErrorCode::kNoOverlap: return "NoOverlap";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kNoMatches: return "NoMatches";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kSchema: return "Schema";
  }
  return "Unknown";
}

struct Error {
  ErrorCode code;
  std::string message;
};

/// Thrown where an error cannot be returned as a value (constructors, I/O).
class CrossviewError : public std::runtime_error {
 public:
  CrossviewError(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}
  explicit CrossviewError(const Error& error)
      : CrossviewError(error.code, error.message) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Value-or-error return type. Expected outcomes such as a rejected merge or a
/// point behind the camera are carried as an Error rather than thrown.
template <typename T>
class Result {
 public:
  Result(T value) : state_(std::move(value)) {}  // NOLINT
  Result(Error error) : state_(std::move(error)) {}  // NOLINT

  bool ok() const noexcept { return std::holds_alternative<T>(state_); }
  explicit operator bool() const noexcept { return ok(); }

  const T& value() const& {
    if (!ok()) throw CrossviewError(error());
    return std::get<T>(state_);
  }
  T& value() & {
    if (!ok()) throw CrossviewError(error());
    return std::get<T>(state_);
  }
  T&& value() && {
    if (!ok()) throw CrossviewError(error());
    return std::get<T>(std::move(state_));
  }

  const Error& error() const { return std::get<Error>(state_); }
  ErrorCode code() const { return error().code; }

  const T& operator*() const& { return value(); }
  const T* operator->() const { return &value(); }

 private:
  std::variant<T, Error> state_;
};

inline Error make_error(ErrorCode code, std::string message = {}) {
  return Error{code, std::move(message)};
}

}  // namespace crossview

#endif  // CROSSVIEW_RESULT_HPP_
