#pragma once

// CSV helpers: 17 significant digits, LF line endings, constant column count.

#include <sdmem/core.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

namespace sdmem {

/// Round-trip decimal rendering of a double ("nan", "inf", "-inf" for non-finite values).
inline std::string format_double(double v, int digits = 17) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

/// Shortest decimal that reads back as the same double; for text reports.
inline std::string format_shortest(double v) {
    if (!std::isfinite(v)) return format_double(v);
    for (int d = 1; d < 17; ++d) {
        std::string s = format_double(v, d);
        if (std::strtod(s.c_str(), nullptr) == v) return s;
    }
    return format_double(v, 17);
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != header_.size()) throw std::invalid_argument("csv row has wrong column count");
        rows_.push_back(std::move(cells));
    }

    std::size_t columns() const { return header_.size(); }
    std::size_t rows() const { return rows_.size(); }

    std::string str() const {
        std::string out;
        append_line(out, header_);
        for (const auto& r : rows_) append_line(out, r);
        return out;
    }

private:
    static void append_line(std::string& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// `t,x_1..x_n[,y_1..y_m]`, one row per mesh node. Chain columns are "nan" on the history part.
inline CsvTable trajectory_csv(const Trajectory& traj) {
    std::vector<std::string> header{"t"};
    for (std::size_t c = 0; c < traj.dimension(); ++c) header.push_back("x_" + std::to_string(c + 1));
    for (std::size_t c = 0; c < traj.aux_dimension(); ++c) header.push_back("y_" + std::to_string(c + 1));
    CsvTable table(std::move(header));
    for (std::size_t i = 0; i < traj.size(); ++i) {
        std::vector<std::string> row{format_double(traj.times()[i])};
        for (double v : traj.state(i)) row.push_back(format_double(v));
        if (traj.aux_dimension())
            for (double v : traj.aux(i)) row.push_back(format_double(v));
        table.add_row(std::move(row));
    }
    return table;
}

/// Writes text in binary mode so line endings stay LF.
inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot open " + path + " for writing");
    out << content;
    if (!out) throw std::ios_base::failure("failed writing " + path);
}

}  // namespace sdmem
