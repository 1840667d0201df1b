#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace y00lab {

/// Raised for unreadable or unwritable files.
class IoError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Raised for malformed input tables and configs.
class FormatError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

namespace csv {

/// Locale-independent, 17 significant digits.
inline std::string format(double value)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
    if (ec != std::errc{})
        throw std::runtime_error("csv::format: conversion failed");
    return {buf, end};
}

inline std::string format(std::uint64_t value) { return std::to_string(value); }
inline std::string format(std::int64_t value) { return std::to_string(value); }
inline std::string format(unsigned value) { return std::to_string(value); }
inline std::string format(int value) { return std::to_string(value); }
inline std::string format(std::string_view value) { return std::string(value); }
inline std::string format(const char* value) { return value; }

inline std::string hex(std::uint64_t value)
{
    char buf[24] = "0x";
    auto [end, ec] = std::to_chars(buf + 2, buf + sizeof buf, value, 16);
    return {buf, end};
}

inline std::uint64_t parse_u64(std::string_view text)
{
    int base = 10;
    if (text.starts_with("0x") || text.starts_with("0X")) {
        text.remove_prefix(2);
        base = 16;
    }
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, base);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw FormatError("invalid integer '" + std::string(text) + "'");
    return value;
}

inline double parse_double(std::string_view text)
{
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw FormatError("invalid number '" + std::string(text) + "'");
    return value;
}

inline std::vector<std::string> split(std::string_view line)
{
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        auto field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
        while (!field.empty() && (field.back() == '\r' || field.back() == ' '))
            field.remove_suffix(1);
        while (!field.empty() && field.front() == ' ')
            field.remove_prefix(1);
        fields.emplace_back(field);
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return fields;
}

/// Row-oriented writer. Rows end with '\n' regardless of platform.
class Writer
{
  public:
    explicit Writer(std::ostream& out) : out_(out) {}

    template <class... Fields>
    void row(const Fields&... fields)
    {
        bool first = true;
        ((out_ << (first ? "" : ",") << format(fields), first = false), ...);
        out_ << '\n';
    }

    void header(std::initializer_list<std::string_view> names)
    {
        bool first = true;
        for (auto n : names) {
            out_ << (first ? "" : ",") << n;
            first = false;
        }
        out_ << '\n';
    }

  private:
    std::ostream& out_;
};

/// Parsed table with a validated header.
struct Table
{
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

inline Table read(std::istream& in, const std::vector<std::string>& expected_header)
{
    Table table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r")
            continue;
        auto fields = split(line);
        if (table.header.empty()) {
            if (fields != expected_header)
                throw FormatError("line " + std::to_string(line_no) + ": unexpected CSV header");
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != expected_header.size())
            throw FormatError("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(expected_header.size()) + " fields");
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    if (table.header.empty())
        throw FormatError("missing CSV header");
    return table;
}

inline std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace csv
} // namespace y00lab
