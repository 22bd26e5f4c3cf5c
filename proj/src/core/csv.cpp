#include "movestat/core/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace movestat {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == delim) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

}  // namespace

int CsvTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return static_cast<int>(i);
    }
    return -1;
}

CsvTable parse_csv(const std::string& text, char delimiter) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split_line(line, delimiter);
        for (auto& c : cells) c = trim(c);
        if (!have_header) {
            table.columns = cells;
            have_header = true;
            continue;
        }
        if (cells.size() != table.columns.size()) {
            throw CsvParseError("row " + std::to_string(lineno) + ": expected " +
                                std::to_string(table.columns.size()) + " cells, got " +
                                std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (!have_header) throw CsvParseError("empty input: no header row");
    return table;
}

CsvTable read_csv(const std::string& path, char delimiter) {
    std::ifstream in(path);
    if (!in) throw CsvParseError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), delimiter);
}

std::optional<double> cell_as_double(const std::string& cell, std::size_t row,
                                     const std::string& column) {
    if (cell.empty() || cell == "NA" || cell == "nan" || cell == "NaN") return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0') {
        throw CsvParseError("row " + std::to_string(row + 1) + ", column '" + column +
                            "': cannot parse '" + cell + "' as a number");
    }
    return v;
}

std::string format_double(double x) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) return buf;
    }
    return buf;
}

}  // namespace movestat
