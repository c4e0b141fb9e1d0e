#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcflab {

/// Bit-stable formatting used by every output file: %.17g round-trips
/// doubles exactly through strtod.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Named-column table of doubles (one row per step / sample).
struct TimeSeriesTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw std::invalid_argument("table: no column '" + name + "'");
    }
    bool has_column(const std::string& name) const {
        for (const auto& c : columns)
            if (c == name) return true;
        return false;
    }
    std::vector<double> column(const std::string& name) const {
        const std::size_t j = column_index(name);
        std::vector<double> out(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i][j];
        return out;
    }

    void write_csv(std::ostream& os) const {
        for (std::size_t j = 0; j < columns.size(); ++j)
            os << (j ? "," : "") << columns[j];
        os << "\n";
        for (const auto& row : rows) {
            for (std::size_t j = 0; j < row.size(); ++j)
                os << (j ? "," : "") << format_double(row[j]);
            os << "\n";
        }
    }
    std::string to_csv() const {
        std::ostringstream os;
        write_csv(os);
        return os.str();
    }

    static TimeSeriesTable read_csv(std::istream& is) {
        TimeSeriesTable t;
        std::string line;
        do {
            if (!std::getline(is, line)) throw std::invalid_argument("table: empty csv");
        } while (line.empty() || line.front() == '#');
        std::stringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
        while (std::getline(is, line)) {
            if (line.empty() || line.front() == '#') continue;
            std::vector<double> row;
            const char* p = line.c_str();
            char* end = nullptr;
            while (*p) {
                row.push_back(std::strtod(p, &end));
                p = (*end == ',') ? end + 1 : end;
                if (end == line.c_str() + line.size()) break;
            }
            if (row.size() != t.columns.size())
                throw std::invalid_argument("table: ragged csv row");
            t.rows.push_back(std::move(row));
        }
        return t;
    }
    static TimeSeriesTable from_csv(const std::string& text) {
        std::istringstream is(text);
        return read_csv(is);
    }
};

} // namespace mcflab
