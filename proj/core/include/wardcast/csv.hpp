#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace wardcast::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index for a header name, -1 when absent.
    int column(const std::string& name) const;
};

// RFC-4180-style parsing: quoted fields, doubled quotes, CR/LF line ends.
// Throws std::runtime_error when the file cannot be opened or has no header.
Table read_file(const std::filesystem::path& path);
Table read_string(const std::string& text);

std::string escape_field(const std::string& field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace wardcast::csv
