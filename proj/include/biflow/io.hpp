#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace biflow {

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double v);

std::string join_doubles(std::span<const double> values, char sep = ',');

/// Reads a whole file. Gzip input (magic 0x1f8b) is decompressed transparently.
std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// Lowercase hex SHA-256 of the raw (possibly compressed) file bytes.
std::string sha256_file(const std::string& path);

}  // namespace biflow
