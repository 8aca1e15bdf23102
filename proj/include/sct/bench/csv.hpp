// csv.hpp: RFC 4180 table writer with round-trip double formatting

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace sct::bench {

using Cell = std::variant<double, std::int64_t, std::string>;

/// 17 significant digits, '.' decimal separator regardless of locale.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    std::string s(buf);
    for (auto& ch : s)
        if (ch == ',') ch = '.';
    return s;
}

/// Quotes a field when it holds a delimiter, quote, line break or edge whitespace.
inline std::string csv_escape(const std::string& field) {
    bool quote = !field.empty() && (field.front() == ' ' || field.back() == ' ');
    for (char ch : field)
        if (ch == ',' || ch == '"' || ch == '\n' || ch == '\r') quote = true;
    if (!quote) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

inline std::string format_cell(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    return csv_escape(std::get<std::string>(c));
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        return columns.size();
    }
    double number(std::size_t row, const std::string& name) const {
        const Cell& c = rows.at(row).at(column(name));
        if (const auto* d = std::get_if<double>(&c)) return *d;
        if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
        return std::nan("");
    }
};

/// Comment lines (prefixed "# "), then the header row, then data; CRLF line endings.
inline void write_csv(std::ostream& os, const Table& t, const std::vector<std::string>& comments) {
    for (const auto& c : comments) os << "# " << c << "\r\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_escape(t.columns[i]);
    os << "\r\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_cell(row[i]);
        os << "\r\n";
    }
}

} // namespace sct::bench
