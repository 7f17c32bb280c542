#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace diabrisk {

// Insertion-ordered everywhere so serialized artifacts are byte-stable.
using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Quantize to 6 decimals for report values; NaN passes through and
// serializes as null, the explicit undefined marker.
double round6(double v);

// Writes via a temp file in the same directory plus rename.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

void write_json_file(const std::filesystem::path& path, const Json& j);

Json read_json_file(const std::filesystem::path& path);

// Model/report headers: {"schema_version": 1, "kind": <kind>}. Loading
// anything else fails loudly.
void check_schema(const Json& j, const std::string& kind);
Json schema_header(const std::string& kind);

std::string read_text_file(const std::filesystem::path& path);

} // namespace diabrisk
