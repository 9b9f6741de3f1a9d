/*
    Copyright (C) 2026 by the SelfServ project contributors

    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared by the line-oriented file formats.
namespace selfserv::text {

/// Splits on every comma. No quoting: "a,,b" yields three fields.
std::vector<std::string_view> split_fields(std::string_view line);

/// Splits a buffer into lines on LF. A trailing LF does not produce an empty last line.
std::vector<std::string_view> split_lines(std::string_view buffer);

std::string_view trim(std::string_view s);

/// Full-field parses; reject leading/trailing junk.
std::optional<double> parse_real(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

/// Fixed notation with at most 6 decimals, trailing zeros stripped but at least one
/// decimal digit kept ("110.0", "0.125", "-3.5").
std::string format_real(double value);

/// Shortest fixed-notation text that parses back to exactly `value` ("70", "54.5",
/// "0.0000001").
std::string format_real_exact(double value);

/// [A-Za-z0-9_.-]+
bool is_identifier(std::string_view s);

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temporary file and renames, so a failed write leaves no
/// partial output behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace selfserv::text
