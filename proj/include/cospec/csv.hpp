#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cospec::csv {

// Minimal reader for the canonical input format: UTF-8, comma separated,
// header row, no quoting, decimal point.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by header name, or nullopt.
    std::optional<std::size_t> column(const std::string& name) const;
};

std::vector<std::string> split_line(const std::string& line);

Table read_file(const std::string& path);
Table read_string(const std::string& content);

std::string join_row(const std::vector<std::string>& fields);

} // namespace cospec::csv
