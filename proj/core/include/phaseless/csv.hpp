#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace phaseless {

// Shortest representation that parses back to the same double.
std::string format_double(double v);

// Minimal comma-separated table: one header row, then rows of fields.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    size_t column(const std::string& name) const;  // throws ConfigError if absent
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(std::istream& in, const std::string& origin);
double parse_double(const std::string& field);

void ensure_parent_directory(const std::string& path);

}  // namespace phaseless
