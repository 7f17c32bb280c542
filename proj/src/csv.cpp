#include "diabrisk/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "diabrisk/common.hpp"
#include "diabrisk/jsonio.hpp"

namespace diabrisk {

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == sep) {
            out.emplace_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

double parse_double_or_missing(const std::string& field, const std::string& context) {
    if (field.empty()) return std::nan("");
    return parse_double(field, context);
}

double parse_double(const std::string& field, const std::string& context) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ValidationError("bad numeric field '" + field + "' in " + context);
    }
    return v;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open: " + path.string());
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_line(line, ',');
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            if (fields.size() != table.header.size()) {
                throw ValidationError("row with " + std::to_string(fields.size()) +
                                      " fields, header has " + std::to_string(table.header.size()) +
                                      " in " + path.string());
            }
            table.rows.push_back(std::move(fields));
        }
    }
    if (first) throw ValidationError("empty CSV: " + path.string());
    return table;
}

std::string to_csv(const CsvTable& table) {
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out << ',';
            out << fields[i];
        }
        out << '\n';
    };
    emit(table.header);
    for (const auto& row : table.rows) emit(row);
    return out.str();
}

} // namespace diabrisk
