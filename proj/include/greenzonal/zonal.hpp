#pragma once

// Zonal vegetation statistics: per-zone pixel counts, km^2 and percent,
// threshold sweeps, multi-zone reports and rankings.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "greenzonal/csv.hpp"
#include "greenzonal/error.hpp"
#include "greenzonal/ndvi.hpp"
#include "greenzonal/parallel.hpp"
#include "greenzonal/raster.hpp"
#include "greenzonal/zone.hpp"
#include "greenzonal/zone_mask.hpp"

namespace greenzonal {

enum class Sensor { modis, sentinel2 };

inline constexpr Sensor kAllSensors[] = {Sensor::modis, Sensor::sentinel2};

inline const char* to_string(Sensor s) { return s == Sensor::modis ? "MODIS" : "SENTINEL2"; }

inline Sensor sensor_from_string(const std::string& s) {
    if (s == "MODIS") return Sensor::modis;
    if (s == "SENTINEL2") return Sensor::sentinel2;
    throw DomainError("unknown sensor '" + s + "' (expected MODIS or SENTINEL2)");
}

// Calibrated city-wide defaults: the rounded means of the per-city
// manual thresholds.
inline double default_threshold(Sensor s) { return s == Sensor::modis ? 0.58 : 0.40; }

// Threshold sweep windows used during manual calibration.
struct SweepProtocol {
    double from, to, step;
};
inline SweepProtocol sweep_protocol(Sensor s) {
    return s == Sensor::modis ? SweepProtocol{0.5, 0.7, 0.05} : SweepProtocol{0.3, 0.6, 0.05};
}

struct ThresholdRecord {
    std::string zone_id;
    Sensor sensor = Sensor::modis;
    double threshold = 0.0;
    friend bool operator==(const ThresholdRecord&, const ThresholdRecord&) = default;
};

// At most one threshold per (zone, sensor), with per-sensor fallbacks.
class ThresholdSet {
public:
    ThresholdSet() {
        for (Sensor s : kAllSensors) defaults_[s] = default_threshold(s);
    }

    void set(const ThresholdRecord& r) {
        check_threshold(r.threshold);
        records_[{r.zone_id, r.sensor}] = r.threshold;
    }
    void set_default(Sensor s, double t) {
        check_threshold(t);
        defaults_[s] = t;
    }

    std::optional<double> find(const std::string& zone_id, Sensor s) const {
        auto it = records_.find({zone_id, s});
        if (it == records_.end()) return std::nullopt;
        return it->second;
    }
    double resolve(const std::string& zone_id, Sensor s) const {
        if (auto t = find(zone_id, s)) return *t;
        return defaults_.at(s);
    }

    // Sorted by zone id, then sensor.
    std::vector<ThresholdRecord> records() const {
        std::vector<ThresholdRecord> out;
        for (const auto& [key, t] : records_) out.push_back({key.first, key.second, t});
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : records())
            arr.push_back({{"zone_id", r.zone_id}, {"sensor", to_string(r.sensor)}, {"threshold", r.threshold}});
        return {{"records", arr}};
    }

    static ThresholdSet from_json(const nlohmann::json& j) {
        if (!j.is_object() || !j.contains("records") || !j["records"].is_array())
            throw ParseError("thresholds document must be an object with a 'records' array");
        ThresholdSet set;
        for (const auto& r : j["records"]) {
            if (!r.is_object() || !r.contains("zone_id") || !r["zone_id"].is_string() || !r.contains("sensor") ||
                !r["sensor"].is_string() || !r.contains("threshold") || !r["threshold"].is_number())
                throw ParseError("threshold record needs zone_id, sensor and threshold");
            ThresholdRecord rec{r["zone_id"].get<std::string>(), sensor_from_string(r["sensor"].get<std::string>()),
                                r["threshold"].get<double>()};
            if (set.find(rec.zone_id, rec.sensor))
                throw ParseError("duplicate threshold record for " + rec.zone_id + "/" + to_string(rec.sensor));
            set.set(rec);
        }
        return set;
    }

    static ThresholdSet parse(std::string_view text) {
        try {
            return from_json(nlohmann::json::parse(text));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("invalid thresholds JSON: ") + e.what());
        }
    }

private:
    std::map<std::pair<std::string, Sensor>, double> records_;
    std::map<Sensor, double> defaults_;
};

struct ZonalResult {
    std::string zone_id;
    std::string zone_name;
    std::string raster_id;
    Sensor sensor = Sensor::modis;
    double threshold = 0.0;
    std::size_t pixels_total = 0;
    std::size_t pixels_veg = 0;
    std::size_t pixels_nodata = 0;
    double pixel_area_km2 = 0.0;
    double total_area_km2 = 0.0;
    double veg_area_km2 = 0.0;
    double veg_pct = 0.0;
    double nodata_pct = 0.0;

    std::size_t pixels_nonveg() const noexcept { return pixels_total - pixels_veg - pixels_nodata; }
    double nonveg_area_km2() const noexcept { return static_cast<double>(pixels_nonveg()) * pixel_area_km2; }
    double nodata_area_km2() const noexcept { return static_cast<double>(pixels_nodata) * pixel_area_km2; }

    friend bool operator==(const ZonalResult&, const ZonalResult&) = default;
};

inline nlohmann::json to_json(const ZonalResult& r) {
    return {{"zone_id", r.zone_id},
            {"zone_name", r.zone_name},
            {"raster_id", r.raster_id},
            {"sensor", to_string(r.sensor)},
            {"threshold", r.threshold},
            {"pixels_total", r.pixels_total},
            {"pixels_veg", r.pixels_veg},
            {"pixels_nodata", r.pixels_nodata},
            {"pixel_area_km2", r.pixel_area_km2},
            {"total_area_km2", r.total_area_km2},
            {"veg_area_km2", r.veg_area_km2},
            {"veg_pct", r.veg_pct},
            {"nodata_pct", r.nodata_pct}};
}

// Integer percent for table display, halves rounded away from zero.
inline long long display_percent(double pct) { return std::llround(pct); }

namespace detail {

struct ZoneSamples {
    std::size_t total = 0;
    std::size_t nodata = 0;
    std::vector<double> values; // valid in-zone samples, ascending
};

inline ZoneSamples collect_zone_samples(const RasterGrid& grid, const ZoneMask& mask) {
    ZoneSamples s;
    const auto& w = mask.window;
    for (long long r = 0; r < w.height; ++r) {
        for (long long c = 0; c < w.width; ++c) {
            if (!mask.inside[static_cast<std::size_t>(r * w.width + c)]) continue;
            ++s.total;
            const double v = grid(static_cast<std::size_t>(w.col0 + c), static_cast<std::size_t>(w.row0 + r));
            if (grid.is_nodata(v))
                ++s.nodata;
            else
                s.values.push_back(v);
        }
    }
    std::sort(s.values.begin(), s.values.end());
    return s;
}

inline std::size_t count_above(const ZoneSamples& s, double threshold) {
    return static_cast<std::size_t>(
        s.values.end() - std::upper_bound(s.values.begin(), s.values.end(), threshold));
}

inline ZonalResult make_result(const Zone& zone, const ZoneSamples& s, double threshold, double area) {
    if (s.total == 0) throw CoverageError("zone '" + zone.id + "' contains no pixel centers");
    ZonalResult r;
    r.zone_id = zone.id;
    r.zone_name = zone.name;
    r.threshold = threshold;
    r.pixels_total = s.total;
    r.pixels_veg = count_above(s, threshold);
    r.pixels_nodata = s.nodata;
    r.pixel_area_km2 = area;
    r.total_area_km2 = static_cast<double>(r.pixels_total) * area;
    r.veg_area_km2 = static_cast<double>(r.pixels_veg) * area;
    r.veg_pct = 100.0 * static_cast<double>(r.pixels_veg) / static_cast<double>(r.pixels_total);
    r.nodata_pct = 100.0 * static_cast<double>(r.pixels_nodata) / static_cast<double>(r.pixels_total);
    return r;
}

} // namespace detail

// Vegetation share of `zone` on an NDVI grid: pixels with center in the
// zone and NDVI strictly above `threshold`. Nodata pixels count toward the
// zone total but never as vegetation.
inline ZonalResult zonal_vegetation(const RasterGrid& ndvi_grid, const Zone& zone, double threshold,
                                    const std::string& raster_id = {}, Sensor sensor = Sensor::modis) {
    check_threshold(threshold);
    const double area = pixel_area_km2(ndvi_grid.transform(), ndvi_grid.crs());
    const ZoneMask mask = rasterize_zone(zone, ndvi_grid);
    auto r = detail::make_result(zone, detail::collect_zone_samples(ndvi_grid, mask), threshold, area);
    r.raster_id = raster_id;
    r.sensor = sensor;
    return r;
}

struct SweepPoint {
    double threshold = 0.0;
    double veg_pct = 0.0;
    double veg_km2 = 0.0;
};

struct SweepSeries {
    std::vector<SweepPoint> points;
};

// Thresholds from, from+step, ... up to `to` (inclusive within 1e-9),
// each snapped to the nearest multiple of 1e-9 so that e.g. 0.3 + 3*0.05
// compares equal to the literal 0.45.
inline std::vector<double> sweep_thresholds(double from, double to, double step) {
    if (!(step > 0.0)) throw DomainError("sweep step must be positive");
    if (!(from <= to)) throw DomainError("sweep requires from <= to");
    check_threshold(from);
    check_threshold(to);
    std::vector<double> out;
    for (std::size_t k = 0;; ++k) {
        const double t = std::round((from + static_cast<double>(k) * step) * 1e9) / 1e9;
        if (t > to + 1e-9) break;
        out.push_back(std::min(t, 1.0));
    }
    return out;
}

inline SweepSeries sweep(const RasterGrid& ndvi_grid, const Zone& zone, double from, double to, double step) {
    const auto thresholds = sweep_thresholds(from, to, step);
    const double area = pixel_area_km2(ndvi_grid.transform(), ndvi_grid.crs());
    const ZoneMask mask = rasterize_zone(zone, ndvi_grid);
    const auto samples = detail::collect_zone_samples(ndvi_grid, mask);
    SweepSeries series;
    for (double t : thresholds) {
        const auto r = detail::make_result(zone, samples, t, area);
        series.points.push_back({t, r.veg_pct, r.veg_area_km2});
    }
    return series;
}

struct SensorRaster {
    Sensor sensor = Sensor::modis;
    std::string raster_id;
    const RasterGrid* grid = nullptr;
};

struct ReportEntry {
    std::string zone_id;
    std::string zone_name;
    Sensor sensor = Sensor::modis;
    std::optional<ZonalResult> result;
    std::string error; // set when result is empty
};

// One entry per zone x sensor, ordered by zone id then sensor (MODIS
// first). Zones are processed concurrently; a zone that a raster does not
// cover yields an error entry and the report continues.
inline std::vector<ReportEntry> run_report(std::span<const SensorRaster> rasters, const std::vector<Zone>& zones,
                                           const ThresholdSet& thresholds, unsigned workers = 0) {
    std::vector<const Zone*> ordered;
    for (const auto& z : zones) ordered.push_back(&z);
    std::sort(ordered.begin(), ordered.end(), [](const Zone* a, const Zone* b) { return a->id < b->id; });

    std::vector<const SensorRaster*> by_sensor;
    for (Sensor s : kAllSensors)
        for (const auto& r : rasters)
            if (r.sensor == s) by_sensor.push_back(&r);

    std::vector<ReportEntry> entries(ordered.size() * by_sensor.size());
    parallel_for(entries.size(), [&](std::size_t i) {
        const Zone& zone = *ordered[i / by_sensor.size()];
        const SensorRaster& sr = *by_sensor[i % by_sensor.size()];
        ReportEntry& e = entries[i];
        e.zone_id = zone.id;
        e.zone_name = zone.name;
        e.sensor = sr.sensor;
        try {
            if (!sr.grid) throw CoverageError("no raster for sensor " + std::string(to_string(sr.sensor)));
            e.result = zonal_vegetation(*sr.grid, zone, thresholds.resolve(zone.id, sr.sensor), sr.raster_id,
                                        sr.sensor);
        } catch (const Error& ex) {
            e.error = ex.what();
        }
    }, workers);
    return entries;
}

enum class RankKey { veg_pct, veg_km2 };

// Descending by key; ties broken by zone id ascending.
inline std::vector<ZonalResult> rank_zones(std::vector<ZonalResult> results, Sensor sensor, RankKey key) {
    std::erase_if(results, [&](const ZonalResult& r) { return r.sensor != sensor; });
    auto value = [&](const ZonalResult& r) { return key == RankKey::veg_pct ? r.veg_pct : r.veg_area_km2; };
    std::sort(results.begin(), results.end(), [&](const ZonalResult& a, const ZonalResult& b) {
        if (value(a) != value(b)) return value(a) > value(b);
        return a.zone_id < b.zone_id;
    });
    return results;
}

// Results CSV: zone_id,name,sensor,threshold,total_km2,veg_km2,veg_pct,nodata_pct
inline constexpr const char* kResultsCsvHeader = "zone_id,name,sensor,threshold,total_km2,veg_km2,veg_pct,nodata_pct";

inline std::string format_threshold(double t) {
    const std::string two = csv::fixed(t, 2);
    if (std::stod(two) == t) return two;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", t);
    return buf;
}

inline std::string write_results_csv(const std::vector<ZonalResult>& results) {
    std::string out = std::string(kResultsCsvHeader) + "\n";
    for (const auto& r : results) {
        out += csv::join({r.zone_id, r.zone_name, to_string(r.sensor), format_threshold(r.threshold),
                          csv::fixed(r.total_area_km2, 2), csv::fixed(r.veg_area_km2, 2),
                          std::to_string(display_percent(r.veg_pct)), std::to_string(display_percent(r.nodata_pct))});
        out += "\n";
    }
    return out;
}

// Reads a results CSV back. Percent and km^2 fields carry their printed
// precision only; pixel counts are not recoverable and stay zero.
inline std::vector<ZonalResult> read_results_csv(std::string_view text) {
    const auto rows = csv::parse(text);
    if (rows.empty() || csv::join(rows.front().fields) != kResultsCsvHeader)
        throw ParseError("results CSV must start with header '" + std::string(kResultsCsvHeader) + "'", 1);
    std::vector<ZonalResult> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i].fields;
        const std::size_t line = rows[i].line;
        if (f.size() != 8) throw ParseError("expected 8 fields", line);
        ZonalResult r;
        r.zone_id = f[0];
        r.zone_name = f[1];
        try {
            r.sensor = sensor_from_string(f[2]);
        } catch (const DomainError& e) {
            throw ParseError(e.what(), line);
        }
        r.threshold = csv::to_double(f[3], line, "threshold");
        r.total_area_km2 = csv::to_double(f[4], line, "total_km2");
        r.veg_area_km2 = csv::to_double(f[5], line, "veg_km2");
        r.veg_pct = csv::to_double(f[6], line, "veg_pct");
        r.nodata_pct = csv::to_double(f[7], line, "nodata_pct");
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace greenzonal
