#pragma once

// City boundaries: parsing from GeoJSON and point queries.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "greenzonal/error.hpp"
#include "greenzonal/geo_model.hpp"

namespace greenzonal {

using Ring = std::vector<WorldPoint>; // explicitly closed: front() == back()

struct Polygon {
    Ring outer;
    std::vector<Ring> holes;
};

struct Zone {
    std::string id;
    std::string name;
    std::vector<Polygon> polygons;
};

struct Bbox {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;
    friend bool operator==(const Bbox&, const Bbox&) = default;
};

// Distance below which a point counts as lying on a zone boundary.
inline constexpr double kBoundaryTolerance = 1e-9;

namespace detail {

// Edges are evaluated with endpoints in a canonical order so that ring
// orientation and starting vertex cannot change any rounding.
inline bool canonical_less(const WorldPoint& a, const WorldPoint& b) {
    return a.y < b.y || (a.y == b.y && a.x < b.x);
}

inline bool near_segment(double x, double y, WorldPoint a, WorldPoint b, double tol) {
    if (canonical_less(b, a)) std::swap(a, b);
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((x - a.x) * dx + (y - a.y) * dy) / len2, 0.0, 1.0);
    const double px = a.x + t * dx - x, py = a.y + t * dy - y;
    return px * px + py * py <= tol * tol;
}

// Crossing-number contribution of edge (a, b) for a ray towards +x.
inline bool ray_crosses(double x, double y, WorldPoint a, WorldPoint b) {
    if (canonical_less(b, a)) std::swap(a, b);
    if ((a.y > y) == (b.y > y)) return false;
    const double xint = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
    return x < xint;
}

template <class Fn>
void for_each_ring(const Zone& zone, Fn&& fn) {
    for (const auto& poly : zone.polygons) {
        fn(poly.outer);
        for (const auto& hole : poly.holes) fn(hole);
    }
}

} // namespace detail

// Even-odd rule over every ring of every polygon; points within
// kBoundaryTolerance of any edge are inside.
inline bool point_in_zone(const Zone& zone, double x, double y) {
    bool inside = false;
    for (const auto& poly : zone.polygons) {
        auto scan = [&](const Ring& ring) {
            for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
                if (detail::near_segment(x, y, ring[i], ring[i + 1], kBoundaryTolerance)) return true;
                if (detail::ray_crosses(x, y, ring[i], ring[i + 1])) inside = !inside;
            }
            return false;
        };
        if (scan(poly.outer)) return true;
        for (const auto& hole : poly.holes)
            if (scan(hole)) return true;
    }
    return inside;
}

inline Bbox zone_bbox(const Zone& zone) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    Bbox b{inf, inf, -inf, -inf};
    detail::for_each_ring(zone, [&](const Ring& ring) {
        for (const auto& p : ring) {
            b.min_x = std::min(b.min_x, p.x);
            b.min_y = std::min(b.min_y, p.y);
            b.max_x = std::max(b.max_x, p.x);
            b.max_y = std::max(b.max_y, p.y);
        }
    });
    if (b.min_x > b.max_x) throw DomainError("zone '" + zone.id + "' has no vertices");
    return b;
}

// Shoelace area of the zone (outer rings minus holes), in CRS units^2.
inline double zone_area(const Zone& zone) {
    auto ring_area = [](const Ring& r) {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < r.size(); ++i) s += r[i].x * r[i + 1].y - r[i + 1].x * r[i].y;
        return std::abs(s) / 2.0;
    };
    double a = 0.0;
    for (const auto& poly : zone.polygons) {
        a += ring_area(poly.outer);
        for (const auto& h : poly.holes) a -= ring_area(h);
    }
    return a;
}

namespace detail {

inline Ring parse_ring(const nlohmann::json& j, const std::string& where, std::vector<std::string>* warnings) {
    if (!j.is_array()) throw ParseError(where + ": ring must be an array of positions");
    Ring ring;
    for (const auto& pos : j) {
        if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number())
            throw ParseError(where + ": position must be [x, y]");
        const double x = pos[0].get<double>(), y = pos[1].get<double>();
        if (!std::isfinite(x) || !std::isfinite(y)) throw ParseError(where + ": non-finite coordinate");
        ring.push_back({x, y});
    }
    std::vector<WorldPoint> distinct;
    for (const auto& p : ring)
        if (std::find(distinct.begin(), distinct.end(), p) == distinct.end()) distinct.push_back(p);
    if (distinct.size() < 3) throw ParseError(where + ": degenerate ring (fewer than 3 distinct points)");
    if (ring.front() != ring.back()) {
        ring.push_back(ring.front());
        if (warnings) warnings->push_back(where + ": ring was not closed; closing point appended");
    }
    return ring;
}

inline Polygon parse_polygon(const nlohmann::json& j, const std::string& where, std::vector<std::string>* warnings) {
    if (!j.is_array() || j.empty()) throw ParseError(where + ": polygon needs at least one ring");
    Polygon poly;
    poly.outer = parse_ring(j[0], where + " ring 0", warnings);
    for (std::size_t i = 1; i < j.size(); ++i)
        poly.holes.push_back(parse_ring(j[i], where + " ring " + std::to_string(i), warnings));
    return poly;
}

} // namespace detail

// Parses a GeoJSON FeatureCollection of Polygon / MultiPolygon features.
// Each feature must carry string properties "id" and "name". Coordinates
// are taken as already expressed in the target raster CRS.
inline std::vector<Zone> parse_zones(std::string_view text, std::vector<std::string>* warnings = nullptr) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
        !doc["features"].is_array())
        throw ParseError("expected a GeoJSON FeatureCollection");

    std::vector<Zone> zones;
    std::set<std::string> seen;
    std::size_t index = 0;
    for (const auto& f : doc["features"]) {
        const std::string where = "feature " + std::to_string(index++);
        if (!f.is_object() || f.value("type", "") != "Feature") throw ParseError(where + ": not a Feature");
        const auto props = f.contains("properties") ? f["properties"] : nlohmann::json();
        if (!props.is_object() || !props.contains("id") || !props["id"].is_string())
            throw ParseError(where + ": missing string property 'id'");
        if (!props.contains("name") || !props["name"].is_string())
            throw ParseError(where + ": missing string property 'name'");
        Zone zone;
        zone.id = props["id"].get<std::string>();
        zone.name = props["name"].get<std::string>();
        if (zone.id.empty()) throw ParseError(where + ": empty id");
        if (!seen.insert(zone.id).second) throw ParseError(where + ": duplicate zone id '" + zone.id + "'");

        if (!f.contains("geometry") || !f["geometry"].is_object())
            throw ParseError(where + " (" + zone.id + "): missing geometry");
        const auto& g = f["geometry"];
        const std::string type = g.value("type", "");
        if (!g.contains("coordinates")) throw ParseError(where + " (" + zone.id + "): missing coordinates");
        const auto& coords = g["coordinates"];
        const std::string ctx = where + " (" + zone.id + ")";
        if (type == "Polygon") {
            zone.polygons.push_back(detail::parse_polygon(coords, ctx, warnings));
        } else if (type == "MultiPolygon") {
            if (!coords.is_array() || coords.empty()) throw ParseError(ctx + ": empty MultiPolygon");
            for (std::size_t p = 0; p < coords.size(); ++p)
                zone.polygons.push_back(detail::parse_polygon(coords[p], ctx + " part " + std::to_string(p), warnings));
        } else {
            throw ParseError(ctx + ": unsupported geometry type '" + type + "' (Polygon or MultiPolygon required)");
        }
        zones.push_back(std::move(zone));
    }
    return zones;
}

inline nlohmann::json zone_to_geojson(const Zone& zone) {
    auto ring_json = [](const Ring& r) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& p : r) a.push_back({p.x, p.y});
        return a;
    };
    auto poly_json = [&](const Polygon& p) {
        nlohmann::json a = nlohmann::json::array();
        a.push_back(ring_json(p.outer));
        for (const auto& h : p.holes) a.push_back(ring_json(h));
        return a;
    };
    nlohmann::json geom;
    if (zone.polygons.size() == 1) {
        geom = {{"type", "Polygon"}, {"coordinates", poly_json(zone.polygons[0])}};
    } else {
        nlohmann::json parts = nlohmann::json::array();
        for (const auto& p : zone.polygons) parts.push_back(poly_json(p));
        geom = {{"type", "MultiPolygon"}, {"coordinates", parts}};
    }
    return {{"type", "Feature"}, {"properties", {{"id", zone.id}, {"name", zone.name}}}, {"geometry", geom}};
}

inline std::string write_zones(const std::vector<Zone>& zones) {
    nlohmann::json fc = {{"type", "FeatureCollection"}, {"features", nlohmann::json::array()}};
    for (const auto& z : zones) fc["features"].push_back(zone_to_geojson(z));
    return fc.dump(1) + "\n";
}

inline const Zone* find_zone(const std::vector<Zone>& zones, std::string_view id) {
    for (const auto& z : zones)
        if (z.id == id) return &z;
    return nullptr;
}

} // namespace greenzonal
