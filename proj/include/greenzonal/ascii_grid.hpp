#pragma once

// ESRI-style ASCII grid: a header of `key value` lines (ncols, nrows,
// xllcorner|xllcenter, yllcorner|yllcenter, cellsize, optional
// NODATA_value; keys case-insensitive) followed by whitespace-separated
// samples in row-major order, top row first.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "greenzonal/error.hpp"
#include "greenzonal/raster.hpp"

namespace greenzonal {

namespace detail {

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

inline std::optional<double> parse_double(std::string_view tok) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return v;
}

inline bool starts_numeric(std::string_view tok) {
    if (tok.empty()) return false;
    const char c = tok.front();
    return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
}

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// yllcorner such that yll + nrows * cellsize reproduces origin_y exactly
// when evaluated by the reader.
inline double exact_lower_left(double origin_y, std::size_t nrows, double cellsize) {
    const double extent = static_cast<double>(nrows) * cellsize;
    double yll = origin_y - extent;
    if (yll + extent == origin_y) return yll;
    double lo = yll, hi = yll;
    for (int i = 0; i < 64; ++i) {
        lo = std::nextafter(lo, -INFINITY);
        hi = std::nextafter(hi, INFINITY);
        if (lo + extent == origin_y) return lo;
        if (hi + extent == origin_y) return hi;
    }
    return yll;
}

} // namespace detail

struct AsciiGridOptions {
    CrsTag crs = CrsTag::projected();
    BandKind band = {};
};

inline RasterGrid read_ascii_grid(std::string_view text, const AsciiGridOptions& opts = {}) {
    std::map<std::string, double> header;
    std::map<std::string, std::size_t> header_line;
    std::vector<double> samples;
    std::vector<std::size_t> sample_lines;

    std::size_t line_no = 0;
    bool in_body = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;

        std::vector<std::string_view> tokens;
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
            std::size_t j = i;
            while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
            if (j > i) tokens.push_back(line.substr(i, j - i));
            i = j;
        }
        if (tokens.empty()) {
            if (eol == text.size()) break;
            continue;
        }

        if (!in_body && !detail::starts_numeric(tokens.front())) {
            if (tokens.size() != 2) throw ParseError("header line must be 'key value'", line_no);
            const std::string key = detail::lower(tokens[0]);
            static const char* known[] = {"ncols",     "nrows",     "xllcorner", "yllcorner",
                                          "xllcenter", "yllcenter", "cellsize",  "nodata_value"};
            if (std::find(std::begin(known), std::end(known), key) == std::end(known))
                throw ParseError("unknown header key '" + std::string(tokens[0]) + "'", line_no);
            if (header.count(key)) throw ParseError("duplicate header key '" + key + "'", line_no);
            auto v = detail::parse_double(tokens[1]);
            if (!v || !std::isfinite(*v))
                throw ParseError("non-numeric value for '" + key + "'", line_no);
            header[key] = *v;
            header_line[key] = line_no;
        } else {
            in_body = true;
            for (auto tok : tokens) {
                auto v = detail::parse_double(tok);
                if (!v) throw ParseError("non-numeric token '" + std::string(tok) + "'", line_no);
                samples.push_back(*v);
                sample_lines.push_back(line_no);
            }
        }
        if (eol == text.size()) break;
    }

    auto require = [&](const char* key) {
        auto it = header.find(key);
        if (it == header.end()) throw ParseError(std::string("missing header key '") + key + "'", line_no);
        return it->second;
    };
    auto count = [&](const char* key) {
        const double v = require(key);
        if (v < 1 || v != std::floor(v)) throw ParseError(std::string(key) + " must be a positive integer", header_line[key]);
        return static_cast<std::size_t>(v);
    };
    const std::size_t ncols = count("ncols");
    const std::size_t nrows = count("nrows");
    const double cellsize = require("cellsize");
    if (!(cellsize > 0.0)) throw ParseError("cellsize must be positive", header_line["cellsize"]);

    auto corner = [&](const char* corner_key, const char* center_key) {
        const bool has_corner = header.count(corner_key) != 0;
        const bool has_center = header.count(center_key) != 0;
        if (has_corner && has_center)
            throw ParseError(std::string("both ") + corner_key + " and " + center_key + " given",
                             header_line[center_key]);
        if (has_center) return header[center_key] - cellsize / 2.0;
        return require(corner_key);
    };
    const double xll = corner("xllcorner", "xllcenter");
    const double yll = corner("yllcorner", "yllcenter");

    std::optional<double> nodata;
    if (auto it = header.find("nodata_value"); it != header.end()) nodata = it->second;

    if (samples.size() != ncols * nrows)
        throw ParseError("expected " + std::to_string(ncols * nrows) + " samples, found " +
                             std::to_string(samples.size()),
                         line_no);
    for (std::size_t k = 0; k < samples.size(); ++k)
        if (!std::isfinite(samples[k]) && !(nodata && samples[k] == *nodata))
            throw ParseError("non-finite sample", sample_lines[k]);

    const double origin_y = yll + static_cast<double>(nrows) * cellsize;
    return RasterGrid(ncols, nrows, std::move(samples), GeoTransform(xll, origin_y, cellsize, cellsize), opts.crs,
                      nodata, SampleType::float64, opts.band);
}

inline std::string write_ascii_grid(const RasterGrid& grid) {
    const GeoTransform& gt = grid.transform();
    if (gt.pixel_width() != gt.pixel_height()) throw DomainError("ASCII grid requires square pixels");

    std::string out;
    out.reserve(grid.size() * 8 + 160);
    auto line = [&](const char* key, const std::string& value) {
        out += key;
        out += ' ';
        out += value;
        out += '\n';
    };
    line("ncols", std::to_string(grid.width()));
    line("nrows", std::to_string(grid.height()));
    line("xllcorner", detail::format_g17(gt.origin_x()));
    line("yllcorner", detail::format_g17(detail::exact_lower_left(gt.origin_y(), grid.height(), gt.pixel_width())));
    line("cellsize", detail::format_g17(gt.pixel_width()));
    if (grid.nodata()) line("NODATA_value", detail::format_g17(*grid.nodata()));

    for (std::size_t r = 0; r < grid.height(); ++r) {
        for (std::size_t c = 0; c < grid.width(); ++c) {
            if (c) out += ' ';
            out += detail::format_g17(grid(c, r));
        }
        out += '\n';
    }
    return out;
}

} // namespace greenzonal
