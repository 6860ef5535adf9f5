#include "cospec/csv.hpp"

#include "cospec/common.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace cospec {

std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

} // namespace cospec

namespace cospec::csv {

std::optional<std::size_t> Table::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

static Table parse_stream(std::istream& in) {
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() && in.eof())
            break;
        if (first) {
            t.header = split_line(line);
            first = false;
        } else if (!line.empty()) {
            t.rows.push_back(split_line(line));
        }
    }
    return t;
}

Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open file: " + path);
    return parse_stream(in);
}

Table read_string(const std::string& content) {
    std::istringstream in(content);
    return parse_stream(in);
}

std::string join_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            out += ',';
        out += fields[i];
    }
    return out;
}

} // namespace cospec::csv
