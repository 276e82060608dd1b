// Vegetation share of the Bucharest zone on the bundled MODIS and
// Sentinel-2 windows, with the calibration sweep for each sensor.
//
//   bucharest_report [fixture-dir]

#include <cstdio>
#include <filesystem>

#include "greenzonal/greenzonal.hpp"

using namespace greenzonal;
namespace fs = std::filesystem;

static void report(const RasterGrid& grid, const Zone& zone, Sensor sensor) {
    const auto r = zonal_vegetation(grid, zone, default_threshold(sensor), "", sensor);
    std::printf("%-10s %s: %zu pixels, %.2f km2 total, %.2f km2 green (%lld%%) at NDVI > %.2f\n", to_string(sensor),
                zone.name.c_str(), r.pixels_total, r.total_area_km2, r.veg_area_km2, display_percent(r.veg_pct),
                r.threshold);
    const auto p = sweep_protocol(sensor);
    for (const auto& pt : sweep(grid, zone, p.from, p.to, p.step).points)
        std::printf("    t=%.2f  %6.2f%%  %8.3f km2\n", pt.threshold, pt.veg_pct, pt.veg_km2);
    const auto h = histogram(grid, zone);
    std::printf("    modal NDVI bin centre %.2f\n", h.bin_center(h.modal_bin()));
}

int main(int argc, char** argv) {
    const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path(GREENZONAL_FIXTURE_DIR);
    try {
        const auto modis = apply_scale(read_raster_file(dir / "bucharest_modis_ndvi.tif"), ScaleSpec::modis_ndvi());
        const auto cities = parse_zones(read_file_text(dir / "zones_ro.geojson"));
        report(modis, *find_zone(cities, "bucuresti"), Sensor::modis);

        const auto s2 = ndvi(read_raster_file(dir / "bucharest_s2_red.tif"), read_raster_file(dir / "bucharest_s2_nir.tif"));
        const auto centre = parse_zones(read_file_text(dir / "bucharest_s2_zone.geojson"));
        report(s2, centre.at(0), Sensor::sentinel2);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
