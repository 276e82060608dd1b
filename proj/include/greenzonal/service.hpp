#pragma once

// HTTP API over a store, used by the calibration front end.
//
//   GET /api/zones                          [{id, name, bbox}]
//   GET /api/rasters                        [{id, sensor, band, crs, width, height, pixel_size}]
//   GET /api/zones/{id}/stats?raster=&threshold=
//   GET /api/zones/{id}/sweep?raster=&from=&to=&step=
//   GET /api/rasters/{id}/preview.png?window=c0,r0,w,h
//   GET /api/rasters/{id}/mask.png?threshold=&zone=&window=
//   GET /api/thresholds
//   PUT /api/thresholds/{zone_id}          {"sensor": "...", "threshold": x}
//
// Rasters and zones are loaded once at startup and never mutated. JSON
// bodies are serialized with sorted keys, so equal values give equal bytes.

#include <charconv>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "greenzonal/error.hpp"
#include "greenzonal/png.hpp"
#include "greenzonal/store.hpp"
#include "greenzonal/zonal.hpp"

namespace greenzonal {

// True when `t` is a multiple of 0.05 (within 1e-9).
inline bool on_calibration_grid(double t) {
    const double k = t * 20.0;
    return std::abs(k - std::round(k)) < 1e-9;
}

inline double snap_to_calibration_grid(double t) { return std::round(t * 20.0) / 20.0; }

class HttpError : public Error {
public:
    HttpError(int status, const std::string& what) : Error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

namespace detail {

inline double query_number(const httplib::Request& req, const char* key) {
    const std::string s = req.get_param_value(key);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw HttpError(400, std::string("parameter '") + key + "' must be a number");
    return v;
}

inline std::optional<double> optional_number(const httplib::Request& req, const char* key) {
    if (!req.has_param(key)) return std::nullopt;
    return query_number(req, key);
}

inline PixelWindow parse_window(const std::string& s) {
    std::vector<long long> parts;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        long long v = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size())
            throw HttpError(400, "window must be c0,r0,w,h");
        parts.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (parts.size() != 4) throw HttpError(400, "window must be c0,r0,w,h");
    if (parts[2] <= 0 || parts[3] <= 0) throw HttpError(400, "window width and height must be positive");
    if (parts[2] * parts[3] > 16'000'000) throw HttpError(400, "window too large");
    return {parts[0], parts[1], parts[2], parts[3]};
}

inline int status_for(const Error& e) {
    if (const auto* h = dynamic_cast<const HttpError*>(&e)) return h->status();
    if (dynamic_cast<const CoverageError*>(&e)) return 409;
    if (dynamic_cast<const DomainError*>(&e) || dynamic_cast<const ParseError*>(&e)) return 400;
    return 500;
}

} // namespace detail

struct LoadedRaster {
    RasterEntry entry;
    RasterGrid grid;
};

class Service {
public:
    explicit Service(const Store& store) : thresholds_(store) {
        zones_ = store.zones();
        std::sort(zones_.begin(), zones_.end(), [](const Zone& a, const Zone& b) { return a.id < b.id; });
        for (const auto& e : store.rasters()) rasters_.emplace(e.id, LoadedRaster{e, store.load_raster(e)});
        routes();
    }

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds to `port` (0 = any free port) and returns the bound port.
    int bind(const std::string& host, int port) {
        if (port == 0) {
            const int p = server_.bind_to_any_port(host);
            if (p < 0) throw IoError("cannot bind " + host);
            return p;
        }
        if (!server_.bind_to_port(host, port))
            throw IoError("cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
        return port;
    }

    // Serves until stop() is called.
    void listen() { server_.listen_after_bind(); }
    void stop() { server_.stop(); }
    void wait_until_ready() const { server_.wait_until_ready(); }

    // The handlers' bodies, callable without a socket.
    nlohmann::json zones_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& z : zones_) {
            const Bbox b = zone_bbox(z);
            arr.push_back({{"id", z.id}, {"name", z.name}, {"bbox", {b.min_x, b.min_y, b.max_x, b.max_y}}});
        }
        return arr;
    }

    nlohmann::json rasters_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [id, r] : rasters_) {
            arr.push_back({{"id", id},
                           {"sensor", to_string(r.entry.sensor)},
                           {"band", to_string(r.grid.band().kind)},
                           {"crs", to_string(r.grid.crs().kind)},
                           {"width", r.grid.width()},
                           {"height", r.grid.height()},
                           {"pixel_size", r.grid.transform().pixel_width()}});
        }
        return arr;
    }

    nlohmann::json stats_json(const std::string& zone_id, const std::string& raster_id,
                              std::optional<double> threshold) const {
        const Zone& zone = zone_or_404(zone_id);
        const LoadedRaster& r = raster_or_404(raster_id);
        const double t = threshold ? *threshold : thresholds_.snapshot().resolve(zone.id, r.entry.sensor);
        return to_json(zonal_vegetation(r.grid, zone, t, raster_id, r.entry.sensor));
    }

    nlohmann::json sweep_json(const std::string& zone_id, const std::string& raster_id, std::optional<double> from,
                              std::optional<double> to, std::optional<double> step) const {
        const Zone& zone = zone_or_404(zone_id);
        const LoadedRaster& r = raster_or_404(raster_id);
        const SweepProtocol p = sweep_protocol(r.entry.sensor);
        const double f = from.value_or(p.from), t = to.value_or(p.to), s = step.value_or(p.step);
        if (!(s > 0.0) || static_cast<double>((t - f) / s) > 10000.0) throw HttpError(400, "invalid sweep range");
        const SweepSeries series = sweep(r.grid, zone, f, t, s);
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& pt : series.points)
            pts.push_back({{"threshold", pt.threshold}, {"veg_pct", pt.veg_pct}, {"veg_km2", pt.veg_km2}});
        return {{"zone_id", zone.id}, {"raster_id", raster_id}, {"sensor", to_string(r.entry.sensor)}, {"points", pts}};
    }

    nlohmann::json thresholds_json() const {
        nlohmann::json j = thresholds_.snapshot().to_json();
        nlohmann::json defaults = nlohmann::json::object();
        for (Sensor s : kAllSensors) defaults[to_string(s)] = default_threshold(s);
        j["defaults"] = defaults;
        return j;
    }

    nlohmann::json put_threshold(const std::string& zone_id, const std::string& body) {
        zone_or_404(zone_id);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error&) {
            throw HttpError(400, "body must be JSON");
        }
        if (!j.is_object() || !j.contains("sensor") || !j["sensor"].is_string() || !j.contains("threshold") ||
            !j["threshold"].is_number())
            throw HttpError(400, "body must be {\"sensor\": string, \"threshold\": number}");
        const Sensor sensor = sensor_from_string(j["sensor"].get<std::string>());
        const double t = j["threshold"].get<double>();
        check_threshold(t);
        if (!on_calibration_grid(t)) throw HttpError(400, "threshold must be a multiple of 0.05");
        const ThresholdRecord rec{zone_id, sensor, snap_to_calibration_grid(t)};
        thresholds_.put(rec);
        return {{"zone_id", rec.zone_id}, {"sensor", to_string(rec.sensor)}, {"threshold", rec.threshold}};
    }

    std::vector<std::uint8_t> preview_png(const std::string& raster_id, const std::optional<std::string>& window) const {
        const LoadedRaster& r = raster_or_404(raster_id);
        return render_preview_png(r.grid, window ? detail::parse_window(*window) : full_window(r.grid));
    }

    std::vector<std::uint8_t> mask_png(const std::string& raster_id, std::optional<double> threshold,
                                       const std::optional<std::string>& zone_id,
                                       const std::optional<std::string>& window) const {
        const LoadedRaster& r = raster_or_404(raster_id);
        const Zone* zone = zone_id ? &zone_or_404(*zone_id) : nullptr;
        double t = default_threshold(r.entry.sensor);
        if (threshold)
            t = *threshold;
        else if (zone)
            t = thresholds_.snapshot().resolve(zone->id, r.entry.sensor);
        return render_mask_png(r.grid, zone, t, window ? detail::parse_window(*window) : full_window(r.grid));
    }

private:
    const Zone& zone_or_404(const std::string& id) const {
        auto it = std::lower_bound(zones_.begin(), zones_.end(), id,
                                   [](const Zone& z, const std::string& key) { return z.id < key; });
        if (it == zones_.end() || it->id != id) throw HttpError(404, "no zone '" + id + "'");
        return *it;
    }

    const LoadedRaster& raster_or_404(const std::string& id) const {
        if (id.empty()) throw HttpError(400, "parameter 'raster' is required");
        auto it = rasters_.find(id);
        if (it == rasters_.end()) throw HttpError(404, "no raster '" + id + "'");
        return it->second;
    }

    static std::optional<std::string> param(const httplib::Request& req, const char* key) {
        if (!req.has_param(key)) return std::nullopt;
        return req.get_param_value(key);
    }

    template <class F>
    static httplib::Server::Handler guarded(F f) {
        return [f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const Error& e) {
                res.status = detail::status_for(e);
                res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
            } catch (const std::exception& e) {
                res.status = 500;
                res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
            }
        };
    }

    static void send_json(httplib::Response& res, const nlohmann::json& j) {
        res.set_content(j.dump(), "application/json");
    }

    void routes() {
        server_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
        server_.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, PUT, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });
        server_.Get("/api/zones", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, zones_json());
        }));
        server_.Get("/api/rasters", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, rasters_json());
        }));
        server_.Get(R"(/api/zones/([^/]+)/stats)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, stats_json(req.matches[1], req.get_param_value("raster"),
                                      detail::optional_number(req, "threshold")));
        }));
        server_.Get(R"(/api/zones/([^/]+)/sweep)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, sweep_json(req.matches[1], req.get_param_value("raster"),
                                      detail::optional_number(req, "from"), detail::optional_number(req, "to"),
                                      detail::optional_number(req, "step")));
        }));
        server_.Get(R"(/api/rasters/([^/]+)/preview\.png)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto png = preview_png(req.matches[1], param(req, "window"));
                        res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
                    }));
        server_.Get(R"(/api/rasters/([^/]+)/mask\.png)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto png = mask_png(req.matches[1], detail::optional_number(req, "threshold"),
                                                  param(req, "zone"), param(req, "window"));
                        res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
                    }));
        server_.Get("/api/thresholds", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, thresholds_json());
        }));
        server_.Put(R"(/api/thresholds/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, put_threshold(req.matches[1], req.body));
        }));
        server_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) {
                const char* msg = res.status == 404 ? "not found" : "request failed";
                res.set_content(nlohmann::json{{"error", msg}}.dump(), "application/json");
            }
        });
    }

    httplib::Server server_;
    std::vector<Zone> zones_;
    std::map<std::string, LoadedRaster> rasters_;
    ThresholdStore thresholds_;
};

} // namespace greenzonal
