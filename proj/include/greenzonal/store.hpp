#pragma once

// On-disk working store shared by the CLI and the service:
//
//   <root>/rasters/index.json   [{id, sensor, file, band, crs, sphere_radius?}]
//   <root>/rasters/<id>.asc     samples as exact ASCII grids
//   <root>/zones.geojson
//   <root>/thresholds.json      {"records": [...]}, replaced atomically
//   <root>/results/
//   <root>/products/            fetched inputs

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "greenzonal/ascii_grid.hpp"
#include "greenzonal/error.hpp"
#include "greenzonal/file_io.hpp"
#include "greenzonal/raster.hpp"
#include "greenzonal/zonal.hpp"
#include "greenzonal/zone.hpp"

namespace greenzonal {

struct RasterEntry {
    std::string id;
    Sensor sensor = Sensor::modis;
    std::string file; // relative to rasters/
    BandKind band;
    CrsTag crs;
};

inline bool valid_raster_id(const std::string& id) {
    if (id.empty() || id.size() > 128) return false;
    for (unsigned char c : id)
        if (!(std::isalnum(c) || c == '-' || c == '_' || c == '.')) return false;
    return id.front() != '.';
}

class Store {
public:
    explicit Store(std::filesystem::path root) : root_(std::move(root)) {}

    const std::filesystem::path& root() const noexcept { return root_; }
    std::filesystem::path rasters_dir() const { return root_ / "rasters"; }
    std::filesystem::path index_path() const { return rasters_dir() / "index.json"; }
    std::filesystem::path zones_path() const { return root_ / "zones.geojson"; }
    std::filesystem::path thresholds_path() const { return root_ / "thresholds.json"; }
    std::filesystem::path results_dir() const { return root_ / "results"; }
    std::filesystem::path products_dir() const { return root_ / "products"; }

    void init() const {
        std::filesystem::create_directories(rasters_dir());
        std::filesystem::create_directories(results_dir());
    }

    std::vector<RasterEntry> rasters() const {
        if (!std::filesystem::exists(index_path())) return {};
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file_text(index_path()));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(index_path().string() + ": " + e.what());
        }
        if (!j.is_array()) throw ParseError(index_path().string() + ": expected an array");
        std::vector<RasterEntry> out;
        for (const auto& e : j) {
            try {
                RasterEntry r;
                r.id = e.at("id").get<std::string>();
                r.sensor = sensor_from_string(e.at("sensor").get<std::string>());
                r.file = e.at("file").get<std::string>();
                r.band = band_kind_from_string(e.at("band").get<std::string>());
                r.crs.kind = crs_kind_from_string(e.at("crs").get<std::string>());
                if (e.contains("sphere_radius")) r.crs.sphere_radius = e["sphere_radius"].get<double>();
                out.push_back(std::move(r));
            } catch (const nlohmann::json::exception& ex) {
                throw ParseError(index_path().string() + ": " + ex.what());
            }
        }
        return out;
    }

    std::optional<RasterEntry> find_raster(const std::string& id) const {
        for (auto& r : rasters())
            if (r.id == id) return r;
        return std::nullopt;
    }

    // Adds or replaces raster `id`.
    void put_raster(const std::string& id, Sensor sensor, const RasterGrid& grid) const {
        if (!valid_raster_id(id)) throw DomainError("raster id '" + id + "' must use [A-Za-z0-9._-]");
        init();
        const std::string file = id + ".asc";
        write_file_atomic(rasters_dir() / file, write_ascii_grid(grid));
        auto entries = rasters();
        std::erase_if(entries, [&](const RasterEntry& r) { return r.id == id; });
        entries.push_back({id, sensor, file, grid.band(), grid.crs()});
        std::sort(entries.begin(), entries.end(), [](const RasterEntry& a, const RasterEntry& b) { return a.id < b.id; });
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : entries) {
            nlohmann::json e{{"id", r.id},
                             {"sensor", to_string(r.sensor)},
                             {"file", r.file},
                             {"band", to_string(r.band.kind)},
                             {"crs", to_string(r.crs.kind)}};
            if (r.crs.sphere_radius) e["sphere_radius"] = *r.crs.sphere_radius;
            j.push_back(std::move(e));
        }
        write_file_atomic(index_path(), j.dump(2) + "\n");
    }

    RasterGrid load_raster(const RasterEntry& e) const {
        const auto path = rasters_dir() / e.file;
        try {
            return read_ascii_grid(read_file_text(path), AsciiGridOptions{e.crs, e.band});
        } catch (const Error& ex) {
            throw Error(path.string() + ": " + ex.what());
        }
    }

    RasterGrid load_raster(const std::string& id) const {
        const auto e = find_raster(id);
        if (!e) throw DomainError("no raster '" + id + "' in store " + root_.string());
        return load_raster(*e);
    }

    bool has_zones() const { return std::filesystem::exists(zones_path()); }

    std::vector<Zone> zones(std::vector<std::string>* warnings = nullptr) const {
        if (!has_zones()) return {};
        try {
            return parse_zones(read_file_text(zones_path()), warnings);
        } catch (const Error& ex) {
            throw Error(zones_path().string() + ": " + ex.what());
        }
    }

    void put_zones(const std::vector<Zone>& zones) const {
        std::filesystem::create_directories(root_);
        write_file_atomic(zones_path(), write_zones(zones));
    }

    ThresholdSet thresholds() const {
        if (!std::filesystem::exists(thresholds_path())) return {};
        try {
            return ThresholdSet::parse(read_file_text(thresholds_path()));
        } catch (const Error& ex) {
            throw Error(thresholds_path().string() + ": " + ex.what());
        }
    }

    void put_thresholds(const ThresholdSet& set) const {
        std::filesystem::create_directories(root_);
        write_file_atomic(thresholds_path(), set.to_json().dump(2) + "\n");
    }

private:
    std::filesystem::path root_;
};

// Single writer for thresholds.json: every mutation is applied to the
// in-memory set and persisted under one lock, so the file on disk always
// matches some complete sequence of accepted updates.
class ThresholdStore {
public:
    explicit ThresholdStore(Store store) : store_(std::move(store)), set_(store_.thresholds()) {}

    ThresholdSet snapshot() const {
        std::lock_guard lock(mu_);
        return set_;
    }

    void put(const ThresholdRecord& rec) {
        std::lock_guard lock(mu_);
        ThresholdSet next = set_;
        next.set(rec);
        store_.put_thresholds(next);
        set_ = std::move(next);
    }

private:
    Store store_;
    mutable std::mutex mu_;
    ThresholdSet set_;
};

} // namespace greenzonal
