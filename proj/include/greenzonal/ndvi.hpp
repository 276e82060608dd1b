#pragma once

// Band math and per-pixel operators: NDVI, integer unpacking, threshold
// classification, maximum-value compositing and NDVI histograms.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "greenzonal/error.hpp"
#include "greenzonal/parallel.hpp"
#include "greenzonal/raster.hpp"
#include "greenzonal/zone_mask.hpp"

namespace greenzonal {

// NDVI = (NIR - RED) / (NIR + RED). Pixels where either band is nodata,
// negative, or where NIR + RED == 0 become nodata.
inline RasterGrid ndvi(const RasterGrid& red, const RasterGrid& nir) {
    if (!red.same_geometry(nir)) throw MismatchError("RED and NIR grids differ in shape or transform");
    RasterGrid out(red.width(), red.height(), red.transform(), red.crs(), kDefaultNodata, SampleType::float32,
                   BandKind::ndvi());
    const auto r = red.samples();
    const auto n = nir.samples();
    auto o = out.samples();
    const std::size_t w = red.width();
    for_each_row_block(red.height(), w, [&](std::size_t row_begin, std::size_t row_end) {
        for (std::size_t i = row_begin * w; i < row_end * w; ++i) {
            const double rv = r[i], nv = n[i];
            if (red.is_nodata(rv) || nir.is_nodata(nv) || rv < 0.0 || nv < 0.0) {
                o[i] = kDefaultNodata;
                continue;
            }
            const double sum = nv + rv;
            o[i] = sum == 0.0 ? kDefaultNodata : (nv - rv) / sum;
        }
    });
    return out;
}

// Linear unpacking of integer-coded products.
struct ScaleSpec {
    double factor = 1.0;
    double fill = 0.0;
    double valid_min = 0.0;
    double valid_max = 0.0;

    void validate() const {
        if (!(valid_min <= valid_max)) throw DomainError("scale spec: valid_min exceeds valid_max");
        if (factor == 0.0 || !std::isfinite(factor)) throw DomainError("scale spec: factor must be finite and non-zero");
    }

    // MODIS vegetation index products: int16, scale 1/10000, fill -3000.
    static ScaleSpec modis_ndvi() { return {1e-4, -3000.0, -2000.0, 10000.0}; }
};

inline RasterGrid apply_scale(const RasterGrid& grid, const ScaleSpec& spec) {
    spec.validate();
    // Divide when the factor is the reciprocal of an integer so that
    // decimal-valued raw codes land exactly on the nearest double
    // (5800 * 1e-4 would round above 0.58).
    const double inverse = 1.0 / spec.factor;
    const bool divide = std::abs(inverse) >= 1.0 && std::abs(inverse - std::round(inverse)) < 1e-9 * std::abs(inverse);
    const double divisor = std::round(inverse);

    RasterGrid out(grid.width(), grid.height(), grid.transform(), grid.crs(), kDefaultNodata, SampleType::float32,
                   grid.band());
    const auto in = grid.samples();
    auto o = out.samples();
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double v = in[i];
        if (grid.is_nodata(v) || v == spec.fill || v < spec.valid_min || v > spec.valid_max) {
            o[i] = kDefaultNodata;
            continue;
        }
        o[i] = divide ? v / divisor : v * spec.factor;
    }
    return out;
}

inline void check_threshold(double threshold) {
    if (!(threshold >= -1.0 && threshold <= 1.0)) throw DomainError("threshold must lie in [-1, 1]");
}

// Vegetation (1) iff ndvi > threshold, else 0. Nodata stays nodata.
inline bool is_vegetation(double ndvi_value, double threshold) noexcept { return ndvi_value > threshold; }

inline RasterGrid classify(const RasterGrid& ndvi_grid, double threshold) {
    check_threshold(threshold);
    double nodata = ndvi_grid.nodata().value_or(255.0);
    if (nodata == 0.0 || nodata == 1.0) nodata = 255.0;
    RasterGrid out(ndvi_grid.width(), ndvi_grid.height(), ndvi_grid.transform(), ndvi_grid.crs(),
                   ndvi_grid.nodata() ? std::optional<double>(nodata) : std::nullopt, SampleType::int16,
                   BandKind::other());
    const auto in = ndvi_grid.samples();
    auto o = out.samples();
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (ndvi_grid.is_nodata(in[i]))
            o[i] = nodata;
        else
            o[i] = is_vegetation(in[i], threshold) ? 1.0 : 0.0;
    }
    return out;
}

// Per-pixel maximum ignoring nodata; nodata only where every input is.
inline RasterGrid max_composite(std::span<const RasterGrid> grids) {
    if (grids.empty()) throw DomainError("composite needs at least one grid");
    const RasterGrid& first = grids.front();
    for (const auto& g : grids)
        if (!g.same_geometry(first)) throw MismatchError("composite inputs differ in shape or transform");

    const double nodata = first.nodata().value_or(kDefaultNodata);
    bool any_missing = false;
    std::vector<double> samples(first.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::optional<double> best;
        for (const auto& g : grids) {
            const double v = g.samples()[i];
            if (g.is_nodata(v)) continue;
            if (!best || v > *best) best = v;
        }
        if (!best) any_missing = true;
        samples[i] = best.value_or(nodata);
    }
    std::optional<double> out_nodata = first.nodata();
    if (any_missing) out_nodata = nodata;
    return RasterGrid(first.width(), first.height(), std::move(samples), first.transform(), first.crs(), out_nodata,
                      first.sample_type(), first.band());
}

inline RasterGrid max_composite(const std::vector<RasterGrid>& grids) {
    return max_composite(std::span<const RasterGrid>(grids));
}

// 50 bins of width 0.04 over [-1, 1]; bins are [lo, hi) except the last,
// which also takes 1.0.
struct Histogram {
    static constexpr std::size_t kBins = 50;

    std::array<double, kBins + 1> bin_edges{};
    std::array<std::size_t, kBins> counts{};
    std::size_t excluded = 0;

    Histogram() {
        for (std::size_t i = 0; i <= kBins; ++i) bin_edges[i] = (-100.0 + 4.0 * static_cast<double>(i)) / 100.0;
    }

    std::size_t total() const noexcept {
        std::size_t s = excluded;
        for (auto c : counts) s += c;
        return s;
    }

    std::optional<std::size_t> bin_of(double v) const noexcept {
        if (!(v >= -1.0 && v <= 1.0)) return std::nullopt;
        auto idx = static_cast<std::size_t>(std::min(std::floor((v + 1.0) / 0.04), double(kBins - 1)));
        while (idx > 0 && v < bin_edges[idx]) --idx;
        while (idx + 1 < kBins && v >= bin_edges[idx + 1]) ++idx;
        return idx;
    }

    void add(double v) {
        if (auto b = bin_of(v))
            ++counts[*b];
        else
            ++excluded;
    }

    // First bin holding the largest count.
    std::size_t modal_bin() const noexcept {
        std::size_t best = 0;
        for (std::size_t i = 1; i < kBins; ++i)
            if (counts[i] > counts[best]) best = i;
        return best;
    }

    double bin_center(std::size_t i) const noexcept { return (bin_edges[i] + bin_edges[i + 1]) / 2.0; }
};

inline Histogram histogram(const RasterGrid& ndvi_grid) {
    Histogram h;
    for (double v : ndvi_grid.samples()) {
        if (ndvi_grid.is_nodata(v))
            ++h.excluded;
        else
            h.add(v);
    }
    return h;
}

// Restricted to pixels whose centers lie inside `zone`.
inline Histogram histogram(const RasterGrid& ndvi_grid, const Zone& zone) {
    const ZoneMask mask = rasterize_zone(zone, ndvi_grid);
    Histogram h;
    const auto& w = mask.window;
    for (long long r = 0; r < w.height; ++r) {
        for (long long c = 0; c < w.width; ++c) {
            if (!mask.inside[static_cast<std::size_t>(r * w.width + c)]) continue;
            const double v = ndvi_grid(static_cast<std::size_t>(w.col0 + c), static_cast<std::size_t>(w.row0 + r));
            if (ndvi_grid.is_nodata(v))
                ++h.excluded;
            else
                h.add(v);
        }
    }
    return h;
}

inline Histogram histogram(const RasterGrid& ndvi_grid, const Zone* zone) {
    return zone ? histogram(ndvi_grid, *zone) : histogram(ndvi_grid);
}

} // namespace greenzonal
