#pragma once

// Command-line front end: `greenzonal <subcommand> [--flag value]...`.
// Exit status 0 on success, 1 on usage errors, 2 on data errors.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "greenzonal/catalog.hpp"
#include "greenzonal/error.hpp"
#include "greenzonal/file_io.hpp"
#include "greenzonal/ndvi.hpp"
#include "greenzonal/published_tables.hpp"
#include "greenzonal/raster_io.hpp"
#include "greenzonal/service.hpp"
#include "greenzonal/store.hpp"
#include "greenzonal/zonal.hpp"

namespace greenzonal {

// Bad flag values and combinations; reported with exit status 1.
class UsageError : public Error {
public:
    using Error::Error;
};

namespace cli_detail {

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline Sensor parse_sensor(const std::string& s) {
    std::string up;
    for (unsigned char c : s) up += static_cast<char>(std::toupper(c));
    if (up == "SENTINEL-2" || up == "S2") up = "SENTINEL2";
    try {
        return sensor_from_string(up);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
}

inline void check_cli_threshold(double t, bool fine) {
    if (!(t >= -1.0 && t <= 1.0)) throw UsageError("threshold must lie in [-1, 1]");
    if (!fine && !on_calibration_grid(t))
        throw UsageError("threshold " + format_threshold(t) + " is off the 0.05 grid; pass --fine to allow it");
}

// Output to a file (atomically) or to `out` when path is empty or "-".
inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-")
        out << text;
    else
        write_file_atomic(path, text);
}

struct RasterSource {
    RasterGrid grid;
    std::string id;
    std::optional<Sensor> sensor;
};

// A raster argument is a file path, or failing that the id of a raster in
// the store.
inline RasterSource load_raster_arg(const std::string& arg, const Store& store) {
    if (std::filesystem::exists(arg)) {
        RasterGrid g = read_raster_file(arg);
        return {std::move(g), std::filesystem::path(arg).stem().string(), std::nullopt};
    }
    if (auto e = store.find_raster(arg)) return {store.load_raster(*e), e->id, e->sensor};
    throw UsageError("raster '" + arg + "' is neither a file nor a raster in store " + store.root().string());
}

inline std::vector<Zone> load_zones_arg(const std::string& path, const Store& store, std::ostream& err, bool quiet) {
    std::vector<std::string> warnings;
    std::vector<Zone> zones;
    if (!path.empty()) {
        try {
            zones = parse_zones(read_file_text(path), &warnings);
        } catch (const Error& e) {
            throw Error(path + ": " + e.what());
        }
    } else {
        if (!store.has_zones()) throw UsageError("no --zones given and store has no zones.geojson");
        zones = store.zones(&warnings);
    }
    if (!quiet)
        for (const auto& w : warnings) err << "warning: " << w << "\n";
    return zones;
}

inline std::string histogram_csv(const Histogram& h) {
    std::string out = "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < Histogram::kBins; ++i)
        out += csv::fixed(h.bin_edges[i], 2) + "," + csv::fixed(h.bin_edges[i + 1], 2) + "," +
               std::to_string(h.counts[i]) + "\n";
    out += "# excluded=" + std::to_string(h.excluded) + "\n";
    out += "# modal_bin_center=" + csv::fixed(h.bin_center(h.modal_bin()), 2) + "\n";
    return out;
}

} // namespace cli_detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    using namespace cli_detail;
    CLI::App app{"Urban green index: NDVI, zonal vegetation statistics and threshold calibration", "greenzonal"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string store_dir = [] {
        const char* env = std::getenv("GREENZONAL_STORE");
        return std::string(env ? env : "greenzonal-store");
    }();
    bool quiet = false;
    app.add_option("--store", store_dir, "Store directory (default $GREENZONAL_STORE or ./greenzonal-store)");
    app.add_flag("--quiet", quiet, "Suppress informational messages");

    auto info = [&]() -> std::ostream& {
        static std::ostringstream sink;
        sink.str("");
        return quiet ? static_cast<std::ostream&>(sink) : err;
    };

    // ingest
    std::string in_input, in_format = "auto", in_sensor, in_id, in_band, in_scale = "auto", in_crs;
    auto* ingest = app.add_subcommand("ingest", "Add a raster, zones or thresholds to the store");
    ingest->add_option("--input", in_input, "Raster (.asc/.tif), zones (.geojson) or thresholds (.json)")->required();
    ingest->add_option("--format", in_format, "Raster format")->check(CLI::IsMember({"auto", "ascii", "gtiff"}));
    ingest->add_option("--sensor", in_sensor, "MODIS or SENTINEL2 (rasters)");
    ingest->add_option("--id", in_id, "Raster id (default: file stem)");
    ingest->add_option("--band", in_band, "Band kind (default NDVI)")
        ->check(CLI::IsMember({"RED", "NIR", "NDVI", "GREEN", "BLUE", "OTHER"}));
    ingest->add_option("--scale", in_scale, "Integer unpacking: auto, none or modis-ndvi")
        ->check(CLI::IsMember({"auto", "none", "modis-ndvi"}));
    ingest->add_option("--crs", in_crs, "CRS for ASCII grids: sinusoidal, projected or geographic")
        ->check(CLI::IsMember({"sinusoidal", "projected", "geographic"}));

    // ndvi
    std::string nd_red, nd_nir, nd_out;
    auto* ndvi_cmd = app.add_subcommand("ndvi", "NDVI from RED and NIR grids");
    ndvi_cmd->add_option("--red", nd_red, "RED band raster")->required();
    ndvi_cmd->add_option("--nir", nd_nir, "NIR band raster")->required();
    ndvi_cmd->add_option("--out", nd_out, "Output raster (.asc or .tif)")->required();

    // composite
    std::string co_inputs, co_out;
    auto* composite = app.add_subcommand("composite", "Per-pixel maximum-value composite");
    composite->add_option("--inputs", co_inputs, "Comma-separated rasters")->required();
    composite->add_option("--out", co_out, "Output raster")->required();

    // zonal
    std::string zo_raster, zo_zones, zo_thresholds, zo_out, zo_sensor;
    std::optional<double> zo_threshold;
    bool zo_fine = false;
    auto* zonal = app.add_subcommand("zonal", "Vegetation area and percent per zone");
    zonal->add_option("--raster", zo_raster, "NDVI raster file or store raster id")->required();
    zonal->add_option("--zones", zo_zones, "Zones GeoJSON (default: store zones)");
    auto* zo_t = zonal->add_option("--threshold", zo_threshold, "One threshold for every zone");
    auto* zo_ts = zonal->add_option("--thresholds", zo_thresholds, "Per-zone thresholds JSON");
    zo_t->excludes(zo_ts);
    zonal->add_option("--sensor", zo_sensor, "Sensor of the raster (default: store entry, else MODIS)");
    zonal->add_option("--out", zo_out, "Results CSV (default stdout)");
    zonal->add_flag("--fine", zo_fine, "Allow thresholds off the 0.05 grid");

    // sweep
    std::string sw_raster, sw_zones, sw_zone, sw_out, sw_sensor;
    std::optional<double> sw_from, sw_to, sw_step;
    auto* sweep_cmd = app.add_subcommand("sweep", "Vegetation percent across a threshold range");
    sweep_cmd->add_option("--raster", sw_raster, "NDVI raster file or store raster id")->required();
    sweep_cmd->add_option("--zones", sw_zones, "Zones GeoJSON (default: store zones)");
    sweep_cmd->add_option("--zone", sw_zone, "Zone id")->required();
    sweep_cmd->add_option("--from", sw_from, "First threshold (default: sensor protocol)");
    sweep_cmd->add_option("--to", sw_to, "Last threshold (default: sensor protocol)");
    sweep_cmd->add_option("--step", sw_step, "Step (default 0.05)");
    sweep_cmd->add_option("--sensor", sw_sensor, "Sensor protocol for defaults (default MODIS)");
    sweep_cmd->add_option("--out", sw_out, "CSV output (default stdout)");

    // rank
    std::string rk_results, rk_sensor, rk_by = "pct";
    auto* rank = app.add_subcommand("rank", "Rank zones from a results CSV");
    rank->add_option("--results", rk_results, "Results CSV")->required();
    rank->add_option("--sensor", rk_sensor, "MODIS or SENTINEL2")->required();
    rank->add_option("--by", rk_by, "Ranking key")->check(CLI::IsMember({"pct", "km2"}));

    // hist
    std::string hi_raster, hi_zone, hi_zones, hi_out;
    auto* hist = app.add_subcommand("hist", "NDVI histogram (50 bins of 0.04)");
    hist->add_option("--raster", hi_raster, "NDVI raster file or store raster id")->required();
    hist->add_option("--zone", hi_zone, "Restrict to a zone id");
    hist->add_option("--zones", hi_zones, "Zones GeoJSON (default: store zones)");
    hist->add_option("--out", hi_out, "CSV output (default stdout)");

    // validate-paper
    std::string vp_table2, vp_table3;
    auto* validate = app.add_subcommand("validate-paper", "Consistency checks of the published threshold and results tables");
    validate->add_option("--table2", vp_table2, "Threshold table CSV")->required();
    validate->add_option("--table3", vp_table3, "Results table CSV")->required();

    // fetch
    std::string fe_manifest;
    unsigned fe_jobs = 4;
    auto* fetch_cmd = app.add_subcommand("fetch", "Download and verify products listed in a manifest");
    fetch_cmd->add_option("--manifest", fe_manifest, "Manifest CSV")->required();
    fetch_cmd->add_option("--jobs", fe_jobs, "Concurrent downloads")->check(CLI::Range(1u, 64u));

    // serve
    int sv_port = 8080;
    std::string sv_host = "127.0.0.1";
    auto* serve = app.add_subcommand("serve", "HTTP API for threshold calibration");
    serve->add_option("--port", sv_port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
    serve->add_option("--host", sv_host, "Bind address");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            if (!app.get_subcommands().empty()) out << app.get_subcommands().front()->help();
            return 0;
        }
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    const Store store(store_dir);
    try {
        if (*ingest) {
            const std::string ext = detail::lower(std::filesystem::path(in_input).extension().string());
            if (ext == ".geojson" || ext == ".json") {
                const std::string text = read_file_text(in_input);
                const auto j = nlohmann::json::parse(text, nullptr, false);
                if (j.is_object() && j.contains("records")) {
                    const ThresholdSet set = ThresholdSet::parse(text);
                    store.put_thresholds(set);
                    info() << "installed " << set.records().size() << " threshold records\n";
                } else {
                    std::vector<std::string> warnings;
                    const auto zones = parse_zones(text, &warnings);
                    for (const auto& w : warnings) info() << "warning: " << w << "\n";
                    store.put_zones(zones);
                    info() << "installed " << zones.size() << " zones\n";
                }
                return 0;
            }
            if (in_sensor.empty()) throw UsageError("ingest of a raster needs --sensor");
            const Sensor sensor = parse_sensor(in_sensor);
            RasterGrid grid = read_raster_file(in_input, raster_format_from_string(in_format));
            if (!in_crs.empty()) {
                grid.set_crs(in_crs == "sinusoidal" ? CrsTag::sinusoidal()
                             : in_crs == "geographic" ? CrsTag::geographic()
                                                      : CrsTag::projected());
            }
            const bool scale = in_scale == "modis-ndvi" ||
                               (in_scale == "auto" && sensor == Sensor::modis && grid.sample_type() == SampleType::int16);
            if (scale) grid = apply_scale(grid, ScaleSpec::modis_ndvi());
            grid.set_band(in_band.empty() ? BandKind::ndvi() : band_kind_from_string(in_band));
            const std::string id = in_id.empty() ? std::filesystem::path(in_input).stem().string() : in_id;
            store.put_raster(id, sensor, grid);
            info() << "ingested " << id << " (" << grid.width() << "x" << grid.height() << ", " << to_string(sensor)
                   << (scale ? ", MODIS NDVI scaling applied" : "") << ")\n";
            return 0;
        }

        if (*ndvi_cmd) {
            const RasterGrid red = read_raster_file(nd_red);
            const RasterGrid nir = read_raster_file(nd_nir);
            write_raster_file(nd_out, ndvi(red, nir));
            return 0;
        }

        if (*composite) {
            std::vector<RasterGrid> grids;
            for (const auto& p : split_list(co_inputs)) grids.push_back(read_raster_file(p));
            if (grids.empty()) throw UsageError("--inputs lists no rasters");
            write_raster_file(co_out, max_composite(grids));
            return 0;
        }

        if (*zonal) {
            auto src = load_raster_arg(zo_raster, store);
            const Sensor sensor = !zo_sensor.empty() ? parse_sensor(zo_sensor) : src.sensor.value_or(Sensor::modis);
            const auto zones = load_zones_arg(zo_zones, store, err, quiet);
            ThresholdSet thresholds;
            if (zo_threshold) {
                check_cli_threshold(*zo_threshold, zo_fine);
                thresholds.set_default(sensor, *zo_threshold);
            } else {
                thresholds = zo_thresholds.empty() ? store.thresholds() : ThresholdSet::parse(read_file_text(zo_thresholds));
                for (const auto& r : thresholds.records())
                    if (r.sensor == sensor) check_cli_threshold(r.threshold, zo_fine);
            }
            const SensorRaster sr{sensor, src.id, &src.grid};
            const auto entries = run_report(std::span<const SensorRaster>(&sr, 1), zones, thresholds);
            std::vector<ZonalResult> results;
            for (const auto& e : entries) {
                if (e.result)
                    results.push_back(*e.result);
                else
                    info() << "warning: " << e.zone_id << ": " << e.error << "\n";
            }
            if (results.empty()) throw CoverageError("no zone overlaps raster " + zo_raster);
            emit(zo_out, write_results_csv(results), out);
            return 0;
        }

        if (*sweep_cmd) {
            auto src = load_raster_arg(sw_raster, store);
            const Sensor sensor = !sw_sensor.empty() ? parse_sensor(sw_sensor) : src.sensor.value_or(Sensor::modis);
            const auto zones = load_zones_arg(sw_zones, store, err, quiet);
            const Zone* zone = find_zone(zones, sw_zone);
            if (!zone) throw UsageError("no zone '" + sw_zone + "'");
            const SweepProtocol p = sweep_protocol(sensor);
            const double from = sw_from.value_or(p.from), to = sw_to.value_or(p.to), step = sw_step.value_or(p.step);
            if (!(step > 0.0) || !(from <= to)) throw UsageError("sweep needs from <= to and step > 0");
            const SweepSeries series = sweep(src.grid, *zone, from, to, step);
            std::string text = "threshold,veg_pct,veg_km2\n";
            for (const auto& pt : series.points)
                text += format_threshold(pt.threshold) + "," + csv::fixed(pt.veg_pct, 4) + "," +
                        csv::fixed(pt.veg_km2, 4) + "\n";
            emit(sw_out, text, out);
            return 0;
        }

        if (*rank) {
            const Sensor sensor = parse_sensor(rk_sensor);
            const auto ranked = rank_zones(read_results_csv(read_file_text(rk_results)), sensor,
                                           rk_by == "km2" ? RankKey::veg_km2 : RankKey::veg_pct);
            std::string text = std::string("rank,zone_id,name,") + (rk_by == "km2" ? "veg_km2" : "veg_pct") + "\n";
            for (std::size_t i = 0; i < ranked.size(); ++i) {
                const auto& r = ranked[i];
                text += csv::join({std::to_string(i + 1), r.zone_id, r.zone_name,
                                   rk_by == "km2" ? csv::fixed(r.veg_area_km2, 2)
                                                  : std::to_string(display_percent(r.veg_pct))}) +
                        "\n";
            }
            out << text;
            return 0;
        }

        if (*hist) {
            auto src = load_raster_arg(hi_raster, store);
            std::optional<Zone> zone;
            if (!hi_zone.empty()) {
                const auto zones = load_zones_arg(hi_zones, store, err, quiet);
                const Zone* z = find_zone(zones, hi_zone);
                if (!z) throw UsageError("no zone '" + hi_zone + "'");
                zone = *z;
            }
            const Histogram h = histogram(src.grid, zone ? &*zone : nullptr);
            emit(hi_out, histogram_csv(h), out);
            return 0;
        }

        if (*validate) {
            const auto t2 = parse_threshold_table(read_file_text(vp_table2));
            const auto t3 = parse_results_table(read_file_text(vp_table3));
            const TableValidation v = validate_published_tables(t2, t3);
            out << "threshold means: MODIS " << csv::fixed(v.modis_mean, 4) << " -> "
                << csv::fixed(round_to(v.modis_mean, 2), 2) << (v.modis_mean_pass ? " ok" : " FAIL") << "; SENTINEL2 "
                << csv::fixed(v.sentinel2_mean, 4) << " -> " << csv::fixed(round_to(v.sentinel2_mean, 2), 2)
                << (v.sentinel2_mean_pass ? " ok" : " FAIL") << "\n";
            for (const auto& r : v.rows)
                if (!r.pass)
                    out << "FAIL " << r.name << " " << to_string(r.sensor) << ": recomputed " << r.rounded_pct
                        << "% vs printed " << csv::fixed(r.printed_pct, 0) << "%\n";
            std::size_t cities_ok = 0;
            for (std::size_t i = 0; i + 1 < v.rows.size(); i += 2) cities_ok += v.rows[i].pass && v.rows[i + 1].pass;
            out << "percent checks: " << v.rows_passed() << "/" << v.rows.size() << " rows, " << cities_ok << "/"
                << t3.size() << " cities pass\n";
            for (const auto& n : v.notes) out << "note: " << n << "\n";
            return v.pass() ? 0 : 2;
        }

        if (*fetch_cmd) {
            const ProductManifest manifest = parse_manifest(read_file_text(fe_manifest));
            FetchOptions opts;
            opts.max_concurrent = fe_jobs;
            const FetchReport report = fetch(manifest, store.products_dir(), opts);
            for (const auto& e : report.entries) {
                out << e.product_id << "," << to_string(e.status);
                if (!e.reason.empty()) out << "," << csv::escape(e.reason);
                out << "\n";
            }
            info() << report.count(FetchStatus::fetched) << " fetched, " << report.count(FetchStatus::cached)
                   << " cached, " << report.count(FetchStatus::failed) << " failed\n";
            return report.count(FetchStatus::failed) ? 2 : 0;
        }

        if (*serve) {
            Service service(store);
            const int port = service.bind(sv_host, sv_port);
            out << "listening on http://" << sv_host << ":" << port << std::endl;
            service.listen();
            return 0;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace greenzonal
