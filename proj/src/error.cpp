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

#include "cott/error.h"

#include <array>
#include <utility>

namespace cott {
namespace {

constexpr std::array<std::pair<ErrorType, std::string_view>, 30> kNames{{
    {ErrorType::SYNTAX, "SyntaxError"},
    {ErrorType::RANGE, "RangeError"},
    {ErrorType::ORDER, "OrderError"},
    {ErrorType::TOO_SHORT, "TooShort"},
    {ErrorType::TOO_LONG, "TooLong"},
    {ErrorType::OVERLAP, "OverlapError"},
    {ErrorType::DURATION, "DurationError"},
    {ErrorType::MIXED_VIEW, "MixedViewError"},
    {ErrorType::EMPTY_KEYWORDS, "EmptyKeywords"},
    {ErrorType::BAD_WINDOW, "BadWindow"},
    {ErrorType::IO, "IoError"},
    {ErrorType::SCHEMA_VERSION, "SchemaVersionError"},
    {ErrorType::UNCLOSED_TAG, "UnclosedTag"},
    {ErrorType::NESTED_TAG, "NestedTag"},
    {ErrorType::UNKNOWN_TAG, "UnknownTag"},
    {ErrorType::JSON_SYNTAX, "JsonSyntax"},
    {ErrorType::UNKNOWN_TOOL, "UnknownTool"},
    {ErrorType::MISSING_ARGUMENT, "MissingArgument"},
    {ErrorType::EXTRA_ARGUMENT, "ExtraArgument"},
    {ErrorType::ARGUMENT_TYPE, "ArgumentType"},
    {ErrorType::OUT_OF_CORPUS, "OutOfCorpus"},
    {ErrorType::LEVEL_UNAVAILABLE, "LevelUnavailable"},
    {ErrorType::RANGE_INVALID, "RangeInvalid"},
    {ErrorType::TOOL_UNAVAILABLE, "ToolUnavailable"},
    {ErrorType::TIMEOUT, "Timeout"},
    {ErrorType::REMOTE, "RemoteError"},
    {ErrorType::PAYLOAD_TOO_LARGE, "PayloadTooLarge"},
    {ErrorType::BACKEND, "BackendError"},
    {ErrorType::SPEC, "SpecError"},
    {ErrorType::INVALID_ARGUMENT, "InvalidArgument"},
}};

std::string
compose(ErrorType type, std::optional<ErrorType> cause, const std::string& path,
        const std::string& message) {
    std::string out(error_type_name(type));
    if (cause) {
        out += "(";
        out += error_type_name(*cause);
        out += ")";
    }
    if (!path.empty()) {
        out += " at ";
        out += path;
    }
    out += ": ";
    out += message;
    return out;
}

}  // namespace

std::string_view
error_type_name(ErrorType type) {
    for (const auto& [t, name] : kNames) {
        if (t == type) {
            return name;
        }
    }
    return "UnknownError";
}

std::optional<ErrorType>
error_type_from_name(std::string_view name) {
    for (const auto& [t, n] : kNames) {
        if (n == name) {
            return t;
        }
    }
    return std::nullopt;
}

Error::Error(ErrorType type, const std::string& message)
    : std::runtime_error(compose(type, std::nullopt, {}, message)), type_(type) {
}

Error::Error(ErrorType type, ErrorType cause, std::string path, const std::string& message)
    : std::runtime_error(compose(type, cause, path, message)),
      type_(type),
      cause_(cause),
      path_(std::move(path)) {
}

}  // namespace cott
