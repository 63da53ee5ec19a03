// Copyright 2026-present the cott-runtime project
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

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cott {

enum class ErrorType {
    // timebase
    SYNTAX,
    RANGE,
    ORDER,
    TOO_SHORT,
    TOO_LONG,
    // memory_index
    OVERLAP,
    DURATION,
    MIXED_VIEW,
    EMPTY_KEYWORDS,
    BAD_WINDOW,
    IO,
    SCHEMA_VERSION,
    // trace grammar
    UNCLOSED_TAG,
    NESTED_TAG,
    UNKNOWN_TAG,
    JSON_SYNTAX,
    UNKNOWN_TOOL,
    MISSING_ARGUMENT,
    EXTRA_ARGUMENT,
    ARGUMENT_TYPE,
    // tool registry
    OUT_OF_CORPUS,
    LEVEL_UNAVAILABLE,
    RANGE_INVALID,
    TOOL_UNAVAILABLE,
    TIMEOUT,
    REMOTE,
    PAYLOAD_TOO_LARGE,
    BACKEND,
    // harness
    SPEC,
    INVALID_ARGUMENT,
};

std::string_view
error_type_name(ErrorType type);

std::optional<ErrorType>
error_type_from_name(std::string_view name);

/// Every failure raised by the library is an Error. `cause` carries the
/// underlying class when one error wraps another, e.g. ARGUMENT_TYPE caused by
/// TOO_LONG on a video range. `path` names the offending argument, if any.
class Error : public std::runtime_error {
public:
    Error(ErrorType type, const std::string& message);
    Error(ErrorType type, ErrorType cause, std::string path, const std::string& message);

    ErrorType
    type() const noexcept {
        return type_;
    }

    std::optional<ErrorType>
    cause() const noexcept {
        return cause_;
    }

    const std::string&
    path() const noexcept {
        return path_;
    }

private:
    ErrorType type_;
    std::optional<ErrorType> cause_;
    std::string path_;
};

}  // namespace cott
