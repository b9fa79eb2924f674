#pragma once

// Minimal CSV support for the shipped formats: comma-separated, no quoting,
// first line is an exact header.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace qacost::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based source line of each row
};

std::vector<std::string> split_line(std::string_view line);

/// Parses text whose first line must equal `expected_header` exactly.
/// Blank lines are skipped; a trailing '\r' is tolerated. Throws Error(parse_error).
Table parse(std::string_view text, std::string_view expected_header, std::string_view source = "<memory>");

/// Throws Error(io_error) with the path when the file cannot be read.
std::string read_file(const std::filesystem::path& path);
/// Creates parent directories; throws Error(io_error) with the path on failure.
void write_file(const std::filesystem::path& path, std::string_view content);

Table read(const std::filesystem::path& path, std::string_view expected_header);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
/// Strict parse of the whole field; throws Error(parse_error).
double parse_double(std::string_view field, std::string_view what);
long long parse_integer(std::string_view field, std::string_view what);

std::string trim(std::string_view s);

}  // namespace qacost::csv
