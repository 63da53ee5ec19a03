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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cott {

/// Throws Error(IO).
std::string
read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place, so readers
/// never observe a partial file. Throws Error(IO).
void
write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Non-blank lines of `text`, trailing '\r' stripped.
std::vector<std::string_view>
split_lines(std::string_view text);

/// Replaces invalid UTF-8 sequences with U+FFFD.
std::string
sanitize_utf8(std::string_view text);

}  // namespace cott
