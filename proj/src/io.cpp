#include "subcycle/io.hpp"

#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace subcycle::io {

std::string fmt12(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value == 0.0 ? 0.0 : value);
    return buf;
}

void write_comment_header(std::ostream& out,
                          const std::vector<std::pair<std::string, std::string>>& entries) {
    for (const auto& [key, value] : entries) out << "# " << key << " = " << value << '\n';
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw std::invalid_argument("CSV has no column '" + name + "'");
}

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (table.columns.empty()) {
            table.columns = std::move(cells);
            continue;
        }
        if (cells.size() != table.columns.size()) {
            throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(table.columns.size()) + " cells");
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(c, &used));
            } catch (const std::exception&) {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (table.columns.empty()) throw std::invalid_argument("CSV is empty");
    return table;
}

}  // namespace subcycle::io
