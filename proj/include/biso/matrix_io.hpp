#pragma once

// Matrix and permutation CSV files. Matrices are one row per line,
// comma-separated decimals, no header, LF endings.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "biso/core.hpp"

namespace biso {

/// Malformed input file. `line` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : std::runtime_error(format(what, line, column)), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, std::size_t line, std::size_t column) {
        if (line == 0) return what;
        std::string s = "line " + std::to_string(line);
        if (column != 0) s += ", field " + std::to_string(column);
        return s + ": " + what;
    }

    std::size_t line_;
    std::size_t column_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

inline double parse_double(std::string_view field, std::size_t line, std::size_t column) {
    double value = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc() || ptr != last) {
        throw ParseError("not a number: '" + std::string(field) + "'", line, column);
    }
    if (!std::isfinite(value)) {
        throw ParseError("non-finite value", line, column);
    }
    return value;
}

inline std::size_t parse_index(std::string_view field, std::size_t line, std::size_t column) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError("not an index: '" + std::string(field) + "'", line, column);
    }
    return value;
}

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace detail

inline Matrix parse_matrix_csv(std::istream& in) {
    std::vector<double> data;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_commas(line);
        if (rows == 0) {
            cols = fields.size();
        } else if (fields.size() != cols) {
            throw ParseError("expected " + std::to_string(cols) + " fields, found " +
                                 std::to_string(fields.size()),
                             lineno);
        }
        for (std::size_t k = 0; k < fields.size(); ++k) {
            data.push_back(detail::parse_double(fields[k], lineno, k + 1));
        }
        ++rows;
    }
    if (rows == 0) throw ParseError("empty matrix file");
    return Matrix(rows, cols, std::move(data));
}

inline void print_matrix_csv(std::ostream& out, const Matrix& m) {
    std::string buf;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        buf.clear();
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) buf += ',';
            buf += detail::format_double(m(i, j));
        }
        buf += '\n';
        out << buf;
    }
}

inline Matrix read_matrix_csv(const std::string& path) {
    auto in = detail::open_in(path);
    return parse_matrix_csv(in);
}

inline void write_matrix_csv(const Matrix& m, const std::string& path) {
    auto out = detail::open_out(path);
    print_matrix_csv(out, m);
    if (!out) throw std::runtime_error("write failed: '" + path + "'");
}

// Permutation file: header "axis,index,image", then one line per position,
// 1-based, e.g. "row,1,3".
inline void write_permutations_csv(const Permutation& rows, const Permutation& cols,
                                   const std::string& path) {
    auto out = detail::open_out(path);
    out << "axis,index,image\n";
    for (std::size_t i = 0; i < rows.size(); ++i) out << "row," << i + 1 << ',' << rows(i) + 1 << '\n';
    for (std::size_t j = 0; j < cols.size(); ++j) out << "col," << j + 1 << ',' << cols(j) + 1 << '\n';
    if (!out) throw std::runtime_error("write failed: '" + path + "'");
}

inline std::pair<Permutation, Permutation> read_permutations_csv(const std::string& path) {
    auto in = detail::open_in(path);
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        if (lineno == 1) {
            if (t != "axis,index,image") throw ParseError("bad permutation header", lineno);
            continue;
        }
        const auto f = detail::split_commas(t);
        if (f.size() != 3) throw ParseError("expected 3 fields", lineno);
        auto& target = f[0] == "row" ? rows : f[0] == "col" ? cols
                                                            : throw ParseError("unknown axis", lineno, 1);
        const std::size_t index = detail::parse_index(f[1], lineno, 2);
        const std::size_t image = detail::parse_index(f[2], lineno, 3);
        if (index != target.size() + 1) throw ParseError("indices must be consecutive", lineno, 2);
        if (image == 0) throw ParseError("indices are 1-based", lineno, 3);
        target.push_back(image - 1);
    }
    try {
        return {Permutation(std::move(rows)), Permutation(std::move(cols))};
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("invalid permutation: ") + e.what());
    }
}

}  // namespace biso
