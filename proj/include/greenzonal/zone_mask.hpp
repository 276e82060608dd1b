#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "greenzonal/error.hpp"
#include "greenzonal/raster.hpp"
#include "greenzonal/zone.hpp"

namespace greenzonal {

// Pixels of a parent grid whose centers fall inside a zone. `inside` is
// row-major over `window` (1 = inside).
struct ZoneMask {
    PixelWindow window;
    std::vector<std::uint8_t> inside;

    bool contains(long long col, long long row) const noexcept {
        const long long c = col - window.col0, r = row - window.row0;
        if (c < 0 || r < 0 || c >= window.width || r >= window.height) return false;
        return inside[static_cast<std::size_t>(r * window.width + c)] != 0;
    }

    std::size_t count() const noexcept {
        return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), std::uint8_t{1}));
    }
};

namespace detail {

struct Edge {
    WorldPoint a, b; // a.y <= b.y
};

inline std::vector<Edge> zone_edges(const Zone& zone) {
    std::vector<Edge> edges;
    for_each_ring(zone, [&](const Ring& ring) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            WorldPoint a = ring[i], b = ring[i + 1];
            if (canonical_less(b, a)) std::swap(a, b);
            edges.push_back({a, b});
        }
    });
    std::sort(edges.begin(), edges.end(), [](const Edge& l, const Edge& r) { return l.a.y < r.a.y; });
    return edges;
}

} // namespace detail

// Flags every pixel of `grid` whose center satisfies point_in_zone. The
// result equals a per-pixel center test exactly: pixels in a column band
// around any edge that reaches the current row are tested individually,
// and each remaining run (whose crossing parity cannot change) is decided
// by testing its first pixel.
inline ZoneMask rasterize_zone(const Zone& zone, const GeoTransform& gt, std::size_t grid_width,
                               std::size_t grid_height) {
    const Bbox bb = zone_bbox(zone);
    const double tol = kBoundaryTolerance;
    const PixelIndex lo = world_to_pixel(gt, bb.min_x - tol, bb.max_y + tol);
    const PixelIndex hi = world_to_pixel(gt, bb.max_x + tol, bb.min_y - tol);
    const long long c0 = std::max<long long>(lo.col, 0);
    const long long r0 = std::max<long long>(lo.row, 0);
    const long long c1 = std::min<long long>(hi.col, static_cast<long long>(grid_width) - 1);
    const long long r1 = std::min<long long>(hi.row, static_cast<long long>(grid_height) - 1);
    if (c0 > c1 || r0 > r1) throw CoverageError("zone '" + zone.id + "' outside raster");

    ZoneMask mask;
    mask.window = {c0, r0, c1 - c0 + 1, r1 - r0 + 1};
    mask.inside.assign(static_cast<std::size_t>(mask.window.width * mask.window.height), 0);

    const auto edges = detail::zone_edges(zone);
    const double margin = tol + gt.pixel_width();
    std::vector<std::pair<double, double>> bands;

    for (long long row = r0; row <= r1; ++row) {
        const double y = pixel_to_world(gt, 0, row).y;
        bands.clear();
        for (const auto& e : edges) {
            if (e.a.y > y + tol) break;
            if (e.b.y < y - tol) continue;
            double xlo, xhi;
            if (e.a.y == e.b.y) {
                xlo = std::min(e.a.x, e.b.x);
                xhi = std::max(e.a.x, e.b.x);
            } else {
                auto x_at = [&](double yy) {
                    yy = std::clamp(yy, e.a.y, e.b.y);
                    return e.a.x + (yy - e.a.y) * (e.b.x - e.a.x) / (e.b.y - e.a.y);
                };
                const double xa = x_at(y - tol), xb = x_at(y + tol);
                xlo = std::min(xa, xb);
                xhi = std::max(xa, xb);
            }
            bands.emplace_back(xlo - margin, xhi + margin);
        }
        std::sort(bands.begin(), bands.end());

        // Column ranges [first, last] needing an individual test.
        std::vector<std::pair<long long, long long>> exact;
        for (const auto& [bx0, bx1] : bands) {
            long long first = static_cast<long long>(std::floor((bx0 - gt.origin_x()) / gt.pixel_width() - 0.5));
            long long last = static_cast<long long>(std::ceil((bx1 - gt.origin_x()) / gt.pixel_width() - 0.5));
            first = std::max(first, c0);
            last = std::min(last, c1);
            if (first > last) continue;
            if (!exact.empty() && first <= exact.back().second + 1)
                exact.back().second = std::max(exact.back().second, last);
            else
                exact.emplace_back(first, last);
        }

        std::uint8_t* out = mask.inside.data() + (row - r0) * mask.window.width;
        auto test = [&](long long col) {
            const WorldPoint p = pixel_to_world(gt, col, row);
            return static_cast<std::uint8_t>(point_in_zone(zone, p.x, p.y) ? 1 : 0);
        };
        long long col = c0;
        std::size_t k = 0;
        while (col <= c1) {
            if (k < exact.size() && col >= exact[k].first) {
                for (; col <= exact[k].second; ++col) out[col - c0] = test(col);
                ++k;
                continue;
            }
            const long long run_end = k < exact.size() ? exact[k].first - 1 : c1;
            const std::uint8_t v = test(col);
            for (; col <= run_end; ++col) out[col - c0] = v;
        }
    }
    return mask;
}

inline ZoneMask rasterize_zone(const Zone& zone, const RasterGrid& grid) {
    return rasterize_zone(zone, grid.transform(), grid.width(), grid.height());
}

} // namespace greenzonal
