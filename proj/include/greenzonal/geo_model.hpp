#pragma once

// Pixel <-> world bookkeeping for axis-aligned north-up grids, and the
// spherical sinusoidal projection of the MODIS land grid.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "greenzonal/error.hpp"

namespace greenzonal {

// Sphere radius of the MODIS sinusoidal grid.
inline constexpr double kModisSphereRadius = 6371007.181;

// Pixel size of the "250 m" MODIS products on the sinusoidal grid
// (tile width 1111950.5197665 m / 4800 pixels).
inline constexpr double kModisGridPixel250 = 231.65635826395825;
inline constexpr double kModisNominalPixel250 = 250.0;
inline constexpr double kSentinel2Pixel10 = 10.0;

struct WorldPoint {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const WorldPoint&, const WorldPoint&) = default;
};

struct PixelIndex {
    long long col = 0;
    long long row = 0;
    friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;
};

// Axis-aligned affine mapping. Rows grow downward: world y decreases as the
// row index increases. Origin is the outer corner of pixel (0, 0).
class GeoTransform {
public:
    GeoTransform() = default;
    GeoTransform(double origin_x, double origin_y, double pixel_width, double pixel_height)
        : origin_x_(origin_x), origin_y_(origin_y), pixel_width_(pixel_width), pixel_height_(pixel_height) {
        if (!std::isfinite(origin_x) || !std::isfinite(origin_y))
            throw DomainError("geotransform origin must be finite");
        if (!std::isfinite(pixel_width) || !std::isfinite(pixel_height) || pixel_width <= 0.0 ||
            pixel_height <= 0.0)
            throw DomainError("pixel size must be finite and strictly positive");
    }

    double origin_x() const noexcept { return origin_x_; }
    double origin_y() const noexcept { return origin_y_; }
    double pixel_width() const noexcept { return pixel_width_; }
    double pixel_height() const noexcept { return pixel_height_; }

    // Same grid geometry shifted by a whole number of pixels.
    GeoTransform shifted(long long col0, long long row0) const {
        return {origin_x_ + static_cast<double>(col0) * pixel_width_,
                origin_y_ - static_cast<double>(row0) * pixel_height_, pixel_width_, pixel_height_};
    }

    friend bool operator==(const GeoTransform&, const GeoTransform&) = default;

private:
    double origin_x_ = 0.0;
    double origin_y_ = 0.0;
    double pixel_width_ = 1.0;
    double pixel_height_ = 1.0;
};

enum class CrsKind { sinusoidal_sphere, projected_meters, geographic_degrees, unknown };

struct CrsTag {
    CrsKind kind = CrsKind::unknown;
    std::optional<double> sphere_radius; // only for sinusoidal_sphere

    static CrsTag sinusoidal(double radius = kModisSphereRadius) {
        if (!(radius > 0.0) || !std::isfinite(radius))
            throw DomainError("sphere radius must be positive");
        return {CrsKind::sinusoidal_sphere, radius};
    }
    static CrsTag projected() { return {CrsKind::projected_meters, std::nullopt}; }
    static CrsTag geographic() { return {CrsKind::geographic_degrees, std::nullopt}; }
    static CrsTag unknown() { return {}; }

    friend bool operator==(const CrsTag&, const CrsTag&) = default;
};

inline const char* to_string(CrsKind kind) {
    switch (kind) {
    case CrsKind::sinusoidal_sphere: return "SINUSOIDAL_SPHERE";
    case CrsKind::projected_meters: return "PROJECTED_METERS";
    case CrsKind::geographic_degrees: return "GEOGRAPHIC_DEGREES";
    case CrsKind::unknown: break;
    }
    return "UNKNOWN";
}

inline CrsKind crs_kind_from_string(const std::string& s) {
    if (s == "SINUSOIDAL_SPHERE") return CrsKind::sinusoidal_sphere;
    if (s == "PROJECTED_METERS") return CrsKind::projected_meters;
    if (s == "GEOGRAPHIC_DEGREES") return CrsKind::geographic_degrees;
    if (s == "UNKNOWN") return CrsKind::unknown;
    throw ParseError("unknown CRS kind '" + s + "'");
}

// World coordinate of the pixel center.
inline WorldPoint pixel_to_world(const GeoTransform& gt, long long col, long long row) noexcept {
    return {gt.origin_x() + (static_cast<double>(col) + 0.5) * gt.pixel_width(),
            gt.origin_y() - (static_cast<double>(row) + 0.5) * gt.pixel_height()};
}

// Pixel containing (x, y). The result may lie outside the grid.
inline PixelIndex world_to_pixel(const GeoTransform& gt, double x, double y) noexcept {
    return {static_cast<long long>(std::floor((x - gt.origin_x()) / gt.pixel_width())),
            static_cast<long long>(std::floor((gt.origin_y() - y) / gt.pixel_height()))};
}

// Area of one pixel in km^2. Grids in an unknown CRS are taken to be in meters.
inline double pixel_area_km2(const GeoTransform& gt, const CrsTag& crs) {
    if (crs.kind == CrsKind::geographic_degrees)
        throw DomainError("area undefined in degrees");
    return gt.pixel_width() * gt.pixel_height() / 1e6;
}

namespace detail {
inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;
} // namespace detail

inline WorldPoint sinusoidal_forward(double lon, double lat, double radius = kModisSphereRadius) {
    if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0))
        throw DomainError("longitude/latitude out of range");
    if (!(radius > 0.0)) throw DomainError("sphere radius must be positive");
    const double phi = lat * detail::kDegToRad;
    const double lambda = lon * detail::kDegToRad;
    return {radius * lambda * std::cos(phi), radius * phi};
}

inline LonLat sinusoidal_inverse(double x, double y, double radius = kModisSphereRadius) {
    if (!(radius > 0.0)) throw DomainError("sphere radius must be positive");
    if (!std::isfinite(x) || !std::isfinite(y)) throw DomainError("coordinates must be finite");
    const double phi = y / radius;
    constexpr double half_pi = std::numbers::pi / 2.0;
    if (std::abs(phi) > half_pi + 1e-15) throw DomainError("y beyond the pole");
    if (std::abs(std::abs(phi) - half_pi) < 1e-12) throw DomainError("longitude undefined at pole");
    const double lambda = x / (radius * std::cos(phi));
    const double lon = lambda * detail::kRadToDeg;
    if (std::abs(lon) > 180.0 + 1e-9) throw DomainError("x outside the projected domain");
    return {lon, phi * detail::kRadToDeg};
}

} // namespace greenzonal
