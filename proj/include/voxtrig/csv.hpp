// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace voxtrig::csv {

using Row = std::vector<std::string>;

// RFC 4180: quoted fields, doubled quotes, CRLF or LF line ends. Blank lines
// are skipped. Throws kFormat on an unterminated quote.
std::vector<Row> Parse(std::string_view text);

std::string ReadFile(const std::filesystem::path& path);
std::vector<Row> ReadFileRows(const std::filesystem::path& path);

// Quotes a field only when it contains a comma, quote or line break.
std::string Escape(std::string_view field);
std::string FormatRow(const Row& row);

// Strict numeric parsing; throws kFormat naming `what` on failure.
double ParseDouble(std::string_view text, std::string_view what);
long long ParseInt(std::string_view text, std::string_view what);

// Shortest round-trip decimal representation.
std::string FormatDouble(double value);

// Index of `name` in header, or throws kFormat.
std::size_t RequireColumn(const Row& header, std::string_view name, std::string_view file);

}  // namespace voxtrig::csv
