#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace promptfx {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

using CsvRow = std::vector<std::string>;

/// RFC 4180 style: comma separated, double-quoted fields may hold commas,
/// quotes ("") and newlines.
std::vector<CsvRow> parse_csv(std::string_view text);
std::string csv_escape(std::string_view field);
std::string format_csv_row(const CsvRow& row);

std::string read_text_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename, so readers never see partial files.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace promptfx
