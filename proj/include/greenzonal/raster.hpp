#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "greenzonal/error.hpp"
#include "greenzonal/geo_model.hpp"

namespace greenzonal {

// Sentinel used when an operation must introduce nodata into a grid that
// did not declare one.
inline constexpr double kDefaultNodata = -9999.0;

// Storage semantics of the samples. Values are always held as double; the
// type only decides how a grid is written back out.
enum class SampleType { int16, uint16, float32, float64 };

inline const char* to_string(SampleType t) {
    switch (t) {
    case SampleType::int16: return "int16";
    case SampleType::uint16: return "uint16";
    case SampleType::float32: return "float32";
    case SampleType::float64: break;
    }
    return "float64";
}

struct WavelengthRange {
    double low_nm = 0.0;
    double high_nm = 0.0;
    friend bool operator==(const WavelengthRange&, const WavelengthRange&) = default;
};

struct BandKind {
    enum class Kind { red, nir, green, blue, ndvi, other };

    Kind kind = Kind::other;
    std::optional<WavelengthRange> wavelength_nm;

    // Visible red: 620-750 nm. Near infrared: 750-1400 nm.
    static BandKind red() { return {Kind::red, WavelengthRange{620.0, 750.0}}; }
    static BandKind nir() { return {Kind::nir, WavelengthRange{750.0, 1400.0}}; }
    static BandKind ndvi() { return {Kind::ndvi, std::nullopt}; }
    static BandKind other() { return {}; }

    friend bool operator==(const BandKind&, const BandKind&) = default;
};

inline const char* to_string(BandKind::Kind k) {
    switch (k) {
    case BandKind::Kind::red: return "RED";
    case BandKind::Kind::nir: return "NIR";
    case BandKind::Kind::green: return "GREEN";
    case BandKind::Kind::blue: return "BLUE";
    case BandKind::Kind::ndvi: return "NDVI";
    case BandKind::Kind::other: break;
    }
    return "OTHER";
}

inline BandKind band_kind_from_string(const std::string& s) {
    if (s == "RED") return BandKind::red();
    if (s == "NIR") return BandKind::nir();
    if (s == "GREEN") return {BandKind::Kind::green, std::nullopt};
    if (s == "BLUE") return {BandKind::Kind::blue, std::nullopt};
    if (s == "NDVI") return BandKind::ndvi();
    if (s == "OTHER") return BandKind::other();
    throw ParseError("unknown band kind '" + s + "'");
}

// Single-band 2-D grid, row-major, with georeferencing and an optional
// nodata sentinel. Every sample is finite or equal to the sentinel.
class RasterGrid {
public:
    RasterGrid() = default;

    RasterGrid(std::size_t width, std::size_t height, GeoTransform transform, CrsTag crs = {},
               std::optional<double> nodata = std::nullopt, SampleType sample_type = SampleType::float64,
               BandKind band = {})
        : RasterGrid(width, height, std::vector<double>(width * height, nodata.value_or(0.0)), transform, crs,
                     nodata, sample_type, band) {}

    RasterGrid(std::size_t width, std::size_t height, std::vector<double> samples, GeoTransform transform,
               CrsTag crs = {}, std::optional<double> nodata = std::nullopt,
               SampleType sample_type = SampleType::float64, BandKind band = {})
        : width_(width), height_(height), samples_(std::move(samples)), nodata_(nodata),
          transform_(transform), crs_(std::move(crs)), sample_type_(sample_type), band_(std::move(band)) {
        if (width_ == 0 || height_ == 0) throw DomainError("raster dimensions must be at least 1x1");
        if (samples_.size() != width_ * height_)
            throw DomainError("sample count " + std::to_string(samples_.size()) + " does not match " +
                              std::to_string(width_) + "x" + std::to_string(height_));
        if (nodata_ && !std::isfinite(*nodata_)) throw DomainError("nodata sentinel must be finite");
        for (double v : samples_)
            if (!std::isfinite(v) && !is_nodata(v)) throw DomainError("non-finite sample without nodata");
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return samples_.size(); }

    std::span<const double> samples() const noexcept { return samples_; }
    std::span<double> samples() noexcept { return samples_; }

    double at(std::size_t col, std::size_t row) const { return samples_.at(row * width_ + col); }
    double& at(std::size_t col, std::size_t row) { return samples_.at(row * width_ + col); }
    double operator()(std::size_t col, std::size_t row) const noexcept { return samples_[row * width_ + col]; }
    double& operator()(std::size_t col, std::size_t row) noexcept { return samples_[row * width_ + col]; }

    const std::optional<double>& nodata() const noexcept { return nodata_; }
    bool is_nodata(double v) const noexcept { return nodata_ && v == *nodata_; }
    bool is_nodata_at(std::size_t col, std::size_t row) const noexcept { return is_nodata((*this)(col, row)); }

    const GeoTransform& transform() const noexcept { return transform_; }
    const CrsTag& crs() const noexcept { return crs_; }
    SampleType sample_type() const noexcept { return sample_type_; }
    const BandKind& band() const noexcept { return band_; }

    void set_band(BandKind band) { band_ = std::move(band); }
    void set_crs(CrsTag crs) { crs_ = std::move(crs); }
    void set_sample_type(SampleType t) noexcept { sample_type_ = t; }

    // Whether `other` shares width, height and transform.
    bool same_geometry(const RasterGrid& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && transform_ == other.transform_;
    }

    friend bool operator==(const RasterGrid&, const RasterGrid&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> samples_;
    std::optional<double> nodata_;
    GeoTransform transform_;
    CrsTag crs_;
    SampleType sample_type_ = SampleType::float64;
    BandKind band_;
};

struct PixelWindow {
    long long col0 = 0;
    long long row0 = 0;
    long long width = 0;
    long long height = 0;
    friend bool operator==(const PixelWindow&, const PixelWindow&) = default;
};

// Window of `grid` starting at (col0, row0). Output pixel (0, 0) maps to
// the same world location as input pixel (col0, row0); parts outside the
// grid are filled with nodata.
inline RasterGrid extract_window(const RasterGrid& grid, const PixelWindow& w) {
    if (w.width <= 0 || w.height <= 0) throw DomainError("window must be at least 1x1");
    const long long gw = static_cast<long long>(grid.width());
    const long long gh = static_cast<long long>(grid.height());
    const long long c_begin = std::max<long long>(w.col0, 0);
    const long long c_end = std::min<long long>(w.col0 + w.width, gw);
    const long long r_begin = std::max<long long>(w.row0, 0);
    const long long r_end = std::min<long long>(w.row0 + w.height, gh);
    if (c_begin >= c_end || r_begin >= r_end) throw CoverageError("window does not intersect the raster");

    const bool fully_inside = c_begin == w.col0 && r_begin == w.row0 && c_end == w.col0 + w.width &&
                              r_end == w.row0 + w.height;
    std::optional<double> nodata = grid.nodata();
    if (!fully_inside && !nodata) nodata = kDefaultNodata;

    RasterGrid out(static_cast<std::size_t>(w.width), static_cast<std::size_t>(w.height),
                   grid.transform().shifted(w.col0, w.row0), grid.crs(), nodata, grid.sample_type(), grid.band());
    for (long long r = r_begin; r < r_end; ++r)
        for (long long c = c_begin; c < c_end; ++c)
            out(static_cast<std::size_t>(c - w.col0), static_cast<std::size_t>(r - w.row0)) =
                grid(static_cast<std::size_t>(c), static_cast<std::size_t>(r));
    return out;
}

// Coarsens `grid` by averaging factor x factor blocks. Blocks containing
// nodata average only their valid samples; all-nodata blocks stay nodata.
// Trailing partial blocks are dropped.
inline RasterGrid aggregate_mean(const RasterGrid& grid, std::size_t factor) {
    if (factor == 0) throw DomainError("aggregation factor must be positive");
    const std::size_t ow = grid.width() / factor;
    const std::size_t oh = grid.height() / factor;
    if (ow == 0 || oh == 0) throw DomainError("aggregation factor exceeds raster size");
    const GeoTransform& gt = grid.transform();
    const GeoTransform out_gt(gt.origin_x(), gt.origin_y(), gt.pixel_width() * static_cast<double>(factor),
                              gt.pixel_height() * static_cast<double>(factor));
    const double nodata = grid.nodata().value_or(kDefaultNodata);
    RasterGrid out(ow, oh, out_gt, grid.crs(), nodata, SampleType::float64, grid.band());
    for (std::size_t orow = 0; orow < oh; ++orow) {
        for (std::size_t ocol = 0; ocol < ow; ++ocol) {
            double sum = 0.0;
            std::size_t n = 0;
            for (std::size_t r = orow * factor; r < (orow + 1) * factor; ++r)
                for (std::size_t c = ocol * factor; c < (ocol + 1) * factor; ++c)
                    if (!grid.is_nodata_at(c, r)) {
                        sum += grid(c, r);
                        ++n;
                    }
            out(ocol, orow) = n ? sum / static_cast<double>(n) : nodata;
        }
    }
    return out;
}

} // namespace greenzonal
