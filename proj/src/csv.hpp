#pragma once

// Minimal comma-separated reader shared by the quote, curve and surface loaders.
// Header row required; blank lines and lines starting with '#' are skipped.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "l1surface/error.hpp"

namespace l1surface::detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;

    double number(std::size_t col) const {
        const std::string& f = fields.at(col);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
            throw ParseError("malformed number '" + f + "'", line);
        return v;
    }
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<CsvRow> rows;

    std::optional<std::size_t> column(std::string_view name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    }

    std::size_t require(std::string_view name) const {
        if (auto c = column(name)) return *c;
        throw ParseError("missing column '" + std::string(name) + "'");
    }
};

inline CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view v = trim(line);
        if (v.empty() || v.front() == '#') continue;
        auto fields = split(v);
        if (!have_header) {
            for (auto& f : fields)
                std::transform(f.begin(), f.end(), f.begin(), [](unsigned char c) { return std::tolower(c); });
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size())
            throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             lineno);
        t.rows.push_back({lineno, std::move(fields)});
    }
    if (!have_header) throw ParseError("empty file");
    return t;
}

}  // namespace l1surface::detail
