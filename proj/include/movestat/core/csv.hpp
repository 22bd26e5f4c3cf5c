#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace movestat {

class CsvParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Minimal delimited-text table: a header row plus string cells. Empty cells
// stay empty; numeric conversion is up to the caller.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const;  // -1 when absent
    std::size_t n_rows() const { return rows.size(); }
};

CsvTable read_csv(const std::string& path, char delimiter = ',');
CsvTable parse_csv(const std::string& text, char delimiter = ',');

// Parse a cell as double; empty -> nullopt; malformed -> CsvParseError with
// row/column context.
std::optional<double> cell_as_double(const std::string& cell, std::size_t row,
                                     const std::string& column);

// Shortest round-trippable decimal representation of x.
std::string format_double(double x);

}  // namespace movestat
