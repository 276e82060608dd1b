#pragma once

// Minimal RFC 4180 reading/writing for the small tables this project
// exchanges (results, published tables, manifests).

#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "greenzonal/error.hpp"

namespace greenzonal::csv {

struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

// Splits `text` into rows. Blank lines and lines starting with '#' are
// skipped. A UTF-8 byte-order mark is ignored.
inline std::vector<Row> parse(std::string_view text) {
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    std::vector<Row> rows;
    std::size_t line = 1;
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t start_line = line;
        if (text[i] == '#') {
            while (i < text.size() && text[i] != '\n') ++i;
            ++i;
            ++line;
            continue;
        }
        Row row;
        row.line = start_line;
        std::string field;
        bool quoted = false;
        bool any = false;
        for (;;) {
            if (i >= text.size()) {
                if (quoted) throw ParseError("unterminated quoted field", start_line);
                break;
            }
            const char c = text[i++];
            if (quoted) {
                if (c == '"') {
                    if (i < text.size() && text[i] == '"') {
                        field += '"';
                        ++i;
                    } else {
                        quoted = false;
                    }
                } else {
                    if (c == '\n') ++line;
                    field += c;
                }
                continue;
            }
            if (c == '"' && field.empty()) {
                quoted = true;
                any = true;
            } else if (c == ',') {
                row.fields.push_back(std::move(field));
                field.clear();
                any = true;
            } else if (c == '\n') {
                ++line;
                break;
            } else if (c != '\r') {
                field += c;
                any = true;
            }
        }
        if (!any && field.empty()) continue;
        row.fields.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string escape(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += escape(fields[i]);
    }
    return out;
}

inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

inline double to_double(const std::string& s, std::size_t line, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string(what) + ": '" + s + "' is not a number", line);
    }
}

} // namespace greenzonal::csv
