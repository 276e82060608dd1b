#pragma once

// PNG encoding (8-bit RGBA, non-interlaced) and the mask/preview renderers
// served to the calibration front end.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <zlib.h>

#include "greenzonal/error.hpp"
#include "greenzonal/ndvi.hpp"
#include "greenzonal/raster.hpp"
#include "greenzonal/zone.hpp"
#include "greenzonal/zone_mask.hpp"

namespace greenzonal {

using Rgba = std::array<std::uint8_t, 4>;

inline constexpr Rgba kVegetationColor{0, 170, 0, 180};
inline constexpr Rgba kNonVegetationColor{0, 0, 0, 0};
inline constexpr Rgba kNodataColor{128, 128, 128, 120};
inline constexpr Rgba kOutsideZoneColor{0, 0, 0, 0};

// Row-major RGBA image.
struct RgbaImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels; // 4 bytes per pixel

    RgbaImage() = default;
    RgbaImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h * 4, 0) {}

    void set(std::size_t col, std::size_t row, const Rgba& c) {
        std::copy(c.begin(), c.end(), pixels.begin() + static_cast<std::ptrdiff_t>((row * width + col) * 4));
    }
    Rgba get(std::size_t col, std::size_t row) const {
        const auto* p = pixels.data() + (row * width + col) * 4;
        return {p[0], p[1], p[2], p[3]};
    }
};

namespace detail {

inline void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_chunk(std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& data) {
    put_u32be(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t type_at = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const uLong crc = crc32(0L, out.data() + type_at, static_cast<uInt>(out.size() - type_at));
    put_u32be(out, static_cast<std::uint32_t>(crc));
}

} // namespace detail

inline std::vector<std::uint8_t> encode_png(const RgbaImage& img) {
    if (img.width == 0 || img.height == 0) throw DomainError("PNG image must be at least 1x1");
    if (img.width > 0x7fffffff || img.height > 0x7fffffff) throw DomainError("PNG image too large");

    std::vector<std::uint8_t> raw;
    raw.reserve(img.height * (img.width * 4 + 1));
    for (std::size_t r = 0; r < img.height; ++r) {
        raw.push_back(0); // filter: none
        const auto* row = img.pixels.data() + r * img.width * 4;
        raw.insert(raw.end(), row, row + img.width * 4);
    }
    uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> z(zlen);
    if (compress2(z.data(), &zlen, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw Error("PNG compression failed");
    z.resize(zlen);

    std::vector<std::uint8_t> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    std::vector<std::uint8_t> ihdr;
    detail::put_u32be(ihdr, static_cast<std::uint32_t>(img.width));
    detail::put_u32be(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.insert(ihdr.end(), {8, 6, 0, 0, 0}); // depth 8, RGBA, deflate, filter 0, no interlace
    detail::put_chunk(out, "IHDR", ihdr);
    detail::put_chunk(out, "IDAT", z);
    detail::put_chunk(out, "IEND", {});
    return out;
}

namespace detail {

inline void check_window_inside(const RasterGrid& grid, const PixelWindow& w) {
    if (w.width <= 0 || w.height <= 0) throw DomainError("window must be at least 1x1");
    if (w.col0 < 0 || w.row0 < 0 || w.col0 + w.width > static_cast<long long>(grid.width()) ||
        w.row0 + w.height > static_cast<long long>(grid.height()))
        throw CoverageError("window " + std::to_string(w.col0) + "," + std::to_string(w.row0) + "," +
                            std::to_string(w.width) + "," + std::to_string(w.height) + " outside raster of " +
                            std::to_string(grid.width()) + "x" + std::to_string(grid.height()));
}

} // namespace detail

inline PixelWindow full_window(const RasterGrid& grid) {
    return {0, 0, static_cast<long long>(grid.width()), static_cast<long long>(grid.height())};
}

// Vegetation mask overlay for `window` of an NDVI grid.
inline RgbaImage render_mask(const RasterGrid& ndvi_grid, const Zone* zone, double threshold,
                             const PixelWindow& window) {
    check_threshold(threshold);
    detail::check_window_inside(ndvi_grid, window);
    std::optional<ZoneMask> mask;
    if (zone) mask = rasterize_zone(*zone, ndvi_grid);

    RgbaImage img(static_cast<std::size_t>(window.width), static_cast<std::size_t>(window.height));
    for (long long r = 0; r < window.height; ++r) {
        for (long long c = 0; c < window.width; ++c) {
            const long long gc = window.col0 + c, gr = window.row0 + r;
            Rgba color;
            if (mask && !mask->contains(gc, gr)) {
                color = kOutsideZoneColor;
            } else {
                const double v = ndvi_grid(static_cast<std::size_t>(gc), static_cast<std::size_t>(gr));
                if (ndvi_grid.is_nodata(v))
                    color = kNodataColor;
                else
                    color = is_vegetation(v, threshold) ? kVegetationColor : kNonVegetationColor;
            }
            img.set(static_cast<std::size_t>(c), static_cast<std::size_t>(r), color);
        }
    }
    return img;
}

inline std::vector<std::uint8_t> render_mask_png(const RasterGrid& ndvi_grid, const Zone* zone, double threshold,
                                                 const PixelWindow& window) {
    return encode_png(render_mask(ndvi_grid, zone, threshold, window));
}

// Brown-to-green ramp over [-1, 1] for NDVI.
inline Rgba ndvi_color(double v) {
    static constexpr std::array<std::pair<double, Rgba>, 5> stops{{{-1.0, {0, 0, 128, 255}},
                                                                    {0.0, {165, 120, 80, 255}},
                                                                    {0.2, {230, 220, 140, 255}},
                                                                    {0.5, {90, 170, 60, 255}},
                                                                    {1.0, {0, 80, 0, 255}}}};
    v = std::clamp(v, -1.0, 1.0);
    for (std::size_t i = 1; i < stops.size(); ++i) {
        if (v <= stops[i].first) {
            const double t = (v - stops[i - 1].first) / (stops[i].first - stops[i - 1].first);
            Rgba c{};
            for (int k = 0; k < 4; ++k)
                c[k] = static_cast<std::uint8_t>(
                    std::lround(stops[i - 1].second[k] + t * (stops[i].second[k] - stops[i - 1].second[k])));
            return c;
        }
    }
    return stops.back().second;
}

// Preview of a window: NDVI grids through the ramp, other bands as a grey
// stretch between the window's valid minimum and maximum.
inline RgbaImage render_preview(const RasterGrid& grid, const PixelWindow& window) {
    detail::check_window_inside(grid, window);
    const bool is_ndvi = grid.band().kind == BandKind::Kind::ndvi;
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (long long r = 0; r < window.height; ++r)
        for (long long c = 0; c < window.width; ++c) {
            const double v = grid(static_cast<std::size_t>(window.col0 + c), static_cast<std::size_t>(window.row0 + r));
            if (grid.is_nodata(v)) continue;
            lo = any ? std::min(lo, v) : v;
            hi = any ? std::max(hi, v) : v;
            any = true;
        }
    RgbaImage img(static_cast<std::size_t>(window.width), static_cast<std::size_t>(window.height));
    for (long long r = 0; r < window.height; ++r)
        for (long long c = 0; c < window.width; ++c) {
            const double v = grid(static_cast<std::size_t>(window.col0 + c), static_cast<std::size_t>(window.row0 + r));
            Rgba color;
            if (grid.is_nodata(v)) {
                color = kNodataColor;
            } else if (is_ndvi) {
                color = ndvi_color(v);
            } else {
                const auto g = static_cast<std::uint8_t>(hi > lo ? std::lround(255.0 * (v - lo) / (hi - lo)) : 128);
                color = {g, g, g, 255};
            }
            img.set(static_cast<std::size_t>(c), static_cast<std::size_t>(r), color);
        }
    return img;
}

inline std::vector<std::uint8_t> render_preview_png(const RasterGrid& grid, const PixelWindow& window) {
    return encode_png(render_preview(grid, window));
}

} // namespace greenzonal
