#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace diabrisk {

// Minimal CSV: no quoting, fields must not contain commas or newlines.
// All files this project writes satisfy that by construction.

std::vector<std::string> split_line(const std::string& line, char sep);

// Shortest round-trip decimal form, so files are byte-stable and lossless.
std::string format_double(double v);

// Empty string decodes to NaN (the explicit missing marker).
double parse_double_or_missing(const std::string& field, const std::string& context);
double parse_double(const std::string& field, const std::string& context);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);
std::string to_csv(const CsvTable& table);

} // namespace diabrisk
