#pragma once

// Deterministic text output: JSON with sorted keys and CSV, both with
// 17-significant-digit floats so that doubles round-trip exactly.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace cmcslab::io {

using json = nlohmann::json;

/// "%.17g"; non-finite values become "inf", "-inf" or "nan".
inline std::string format_double(double x)
{
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// JSON numbers cannot be non-finite; those are stored as strings.
inline json number(double x)
{
    if (std::isfinite(x)) {
        return x;
    }
    return format_double(x);
}

/// Reads a number written by `number`.
inline double to_double(const json& j)
{
    if (j.is_number()) {
        return j.get<double>();
    }
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        if (s == "-inf") {
            return -std::numeric_limits<double>::infinity();
        }
        if (s == "nan") {
            return std::numeric_limits<double>::quiet_NaN();
        }
    }
    throw std::invalid_argument("expected a number, got " + j.dump());
}

namespace detail {

inline void emit(std::ostream& os, const json& j, int indent, int depth)
{
    const auto pad = [&](int d) {
        if (indent > 0) {
            os << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
        }
    };
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) { // std::map keeps keys sorted
            if (!first) {
                os << ',';
            }
            first = false;
            pad(depth + 1);
            os << json(it.key()).dump() << (indent > 0 ? ": " : ":");
            emit(os, it.value(), indent, depth + 1);
        }
        pad(depth);
        os << '}';
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            os << "[]";
            return;
        }
        os << '[';
        bool first = true;
        for (const auto& v : j) {
            if (!first) {
                os << ',';
            }
            first = false;
            pad(depth + 1);
            emit(os, v, indent, depth + 1);
        }
        pad(depth);
        os << ']';
        return;
    }
    case json::value_t::number_float:
        os << format_double(j.get<double>());
        return;
    default:
        os << j.dump();
        return;
    }
}

} // namespace detail

inline void write_json(std::ostream& os, const json& j, int indent = 2)
{
    detail::emit(os, j, indent, 0);
    os << '\n';
}

inline std::string to_json_string(const json& j, int indent = 2)
{
    std::ostringstream os;
    write_json(os, j, indent);
    return os.str();
}

/// Writes `text` to `path`; "-" means stdout.
inline void write_file(const std::string& path, const std::string& text)
{
    if (path == "-") {
        std::cout << text << std::flush;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw std::ios_base::failure("cannot open " + path + " for writing");
    }
    f << text;
    f.close();
    if (!f) {
        throw std::ios_base::failure("write to " + path + " failed");
    }
}

inline std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw std::ios_base::failure("cannot open " + path);
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// One CSV row of doubles.
inline std::string csv_row(const std::vector<double>& values)
{
    std::string line;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            line += ',';
        }
        line += format_double(values[i]);
    }
    return line;
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') {
            cell.pop_back();
        }
        out.push_back(cell);
    }
    return out;
}

} // namespace cmcslab::io
