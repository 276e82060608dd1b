#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "greenzonal/file_io.hpp"
#include "greenzonal/published_tables.hpp"
#include "greenzonal/raster_io.hpp"
#include "greenzonal/zonal.hpp"
#include "test_support.hpp"

using namespace greenzonal;

namespace {

Zone rect(const std::string& id, double x0, double y0, double x1, double y1) {
    Zone z;
    z.id = id;
    z.name = "Zone " + id;
    z.polygons.push_back({{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}, {}});
    return z;
}

void expect_mask_matches_oracle(const Zone& zone, const RasterGrid& g) {
    const ZoneMask mask = rasterize_zone(zone, g);
    for (std::size_t r = 0; r < g.height(); ++r)
        for (std::size_t c = 0; c < g.width(); ++c) {
            const auto p = pixel_to_world(g.transform(), long(c), long(r));
            ASSERT_EQ(mask.contains(long(c), long(r)), gz_test::oracle_inside(zone, p.x, p.y)) << c << "," << r;
        }
}

} // namespace

TEST(Rasterize, GridAlignedAndHalfPixelSquares) {
    const RasterGrid g(20, 20, GeoTransform(0, 200, 10, 10));
    expect_mask_matches_oracle(rect("a", 30, 30, 130, 130), g);
    // edges exactly through pixel centers count those pixels in
    const Zone half = rect("b", 35, 35, 125, 125);
    expect_mask_matches_oracle(half, g);
    EXPECT_EQ(rasterize_zone(half, g).count(), 100u);
    Zone holed = rect("c", 0, 0, 200, 200);
    holed.polygons[0].holes.push_back({{50, 50}, {150, 50}, {150, 150}, {50, 150}, {50, 50}});
    expect_mask_matches_oracle(holed, g);
    EXPECT_EQ(rasterize_zone(holed, g).count(), 400u - 100u);
}

TEST(Rasterize, RandomZonesMatchOracle) {
    std::mt19937_64 rng(31337);
    std::uniform_int_distribution<int> dim(8, 64);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t w = dim(rng), h = dim(rng);
        const GeoTransform gt(1000.0 * trial, 5000.0, 30.0, 30.0);
        const RasterGrid g(w, h, gt);
        const Zone z = gz_test::random_zone(rng, gt, w, h);
        SCOPED_TRACE("trial " + std::to_string(trial));
        expect_mask_matches_oracle(z, g);
    }
}

TEST(Rasterize, OutsideRasterIsCoverageError) {
    const RasterGrid g(10, 10, GeoTransform(0, 100, 10, 10));
    EXPECT_THROW(rasterize_zone(rect("far", 500, 500, 600, 600), g), CoverageError);
}

TEST(ZonalVegetation, FullyVegetatedBlock) {
    // 100 pixels of 250 m: 6.25 km^2
    RasterGrid g(20, 20, std::vector<double>(400, 0.9), GeoTransform(0, 5000, 250, 250), CrsTag::sinusoidal(),
                 kDefaultNodata);
    const auto r = zonal_vegetation(g, rect("v", 0, 2500, 2500, 5000), 0.58);
    EXPECT_EQ(r.pixels_total, 100u);
    EXPECT_EQ(r.pixels_veg, 100u);
    EXPECT_DOUBLE_EQ(r.total_area_km2, 6.25);
    EXPECT_DOUBLE_EQ(r.veg_area_km2, 6.25);
    EXPECT_EQ(r.veg_pct, 100.0);
    EXPECT_EQ(r.nodata_pct, 0.0);
}

TEST(ZonalVegetation, NodataCountsTowardTotalOnly) {
    RasterGrid g(2, 2, std::vector<double>{0.9, kDefaultNodata, 0.1, 0.58}, GeoTransform(0, 20, 10, 10),
                 CrsTag::projected(), kDefaultNodata);
    const auto r = zonal_vegetation(g, rect("x", 0, 0, 20, 20), 0.58);
    EXPECT_EQ(r.pixels_total, 4u);
    EXPECT_EQ(r.pixels_veg, 1u);
    EXPECT_EQ(r.pixels_nodata, 1u);
    EXPECT_EQ(r.pixels_nonveg(), 2u);
    EXPECT_EQ(r.veg_pct, 25.0);
    EXPECT_EQ(r.nodata_pct, 25.0);
}

TEST(ZonalVegetation, RandomTrialsMatchOracleExactly) {
    std::mt19937_64 rng(5150);
    std::uniform_int_distribution<int> dim(8, 64);
    std::uniform_real_distribution<double> thr(-0.9, 0.9);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t w = dim(rng), h = dim(rng);
        const GeoTransform gt(-3000.0, 9000.0, 231.65635826395825, 231.65635826395825);
        auto g = gz_test::random_ndvi_grid(rng, w, h, gt, 0.1);
        g.set_crs(CrsTag::sinusoidal());
        const Zone z = gz_test::random_zone(rng, gt, w, h);
        const double t = std::round(thr(rng) * 20) / 20;
        const auto want = gz_test::oracle_zonal(g, z, t);
        if (want.total == 0) {
            EXPECT_THROW(zonal_vegetation(g, z, t), CoverageError);
            continue;
        }
        const auto got = zonal_vegetation(g, z, t);
        ASSERT_EQ(got.pixels_total, want.total) << trial;
        ASSERT_EQ(got.pixels_veg, want.veg) << trial;
        ASSERT_EQ(got.pixels_nodata, want.nodata) << trial;
        const double a = pixel_area_km2(gt, CrsTag::sinusoidal());
        EXPECT_EQ(got.veg_area_km2, double(want.veg) * a);
        EXPECT_EQ(got.total_area_km2, double(want.total) * a);
        // accounting invariant
        EXPECT_NEAR(got.veg_area_km2 + got.nonveg_area_km2() + got.nodata_area_km2(), got.total_area_km2, 1e-9);
    }
}

TEST(ZonalVegetation, CoarseBlocksHideSmallPatches) {
    // Scattered fine pixels, about 60% vegetation. Averaged to 25x25 blocks
    // every block mean clears the threshold, so the coarse view overstates
    // the share while the zone area stays the same.
    const std::size_t n = 100;
    RasterGrid fine(n, n, GeoTransform(0, 1000, 10, 10), CrsTag::projected(), kDefaultNodata);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 1);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) fine(c, r) = u(rng) < 0.6 ? 0.8 : 0.1;
    const Zone all = rect("all", 0, 0, 1000, 1000);
    const auto fine_r = zonal_vegetation(fine, all, 0.4);
    EXPECT_GE(fine_r.veg_pct, 55.0);
    const auto coarse = aggregate_mean(fine, 25);
    EXPECT_EQ(coarse.width(), 4u);
    const auto coarse_r = zonal_vegetation(coarse, all, 0.4);
    // each block mean is ~0.52 > 0.4, so the coarse grid reports all vegetation
    EXPECT_EQ(coarse_r.veg_pct, 100.0);
    EXPECT_EQ(coarse_r.total_area_km2, fine_r.total_area_km2);
}

TEST(Sweep, ProtocolPointCountsAndMonotone) {
    EXPECT_EQ(sweep_thresholds(0.5, 0.7, 0.05).size(), 5u);
    EXPECT_EQ(sweep_thresholds(0.3, 0.6, 0.05).size(), 7u);
    EXPECT_EQ(sweep_thresholds(0.3, 0.6, 0.05)[3], 0.45);
    EXPECT_THROW(sweep_thresholds(0.5, 0.4, 0.05), DomainError);
    EXPECT_THROW(sweep_thresholds(0.5, 0.7, 0.0), DomainError);

    std::mt19937_64 rng(12);
    const GeoTransform gt(0, 640, 10, 10);
    const auto g = gz_test::random_ndvi_grid(rng, 64, 64, gt);
    const auto s = sweep(g, rect("s", 0, 0, 640, 640), 0.3, 0.6, 0.05);
    ASSERT_EQ(s.points.size(), 7u);
    for (std::size_t i = 1; i < s.points.size(); ++i) EXPECT_LE(s.points[i].veg_pct, s.points[i - 1].veg_pct);
    const auto direct = zonal_vegetation(g, rect("s", 0, 0, 640, 640), 0.45);
    EXPECT_EQ(s.points[3].veg_pct, direct.veg_pct);
}

TEST(Report, OrderingErrorsAndThresholdPrecedence) {
    RasterGrid g(10, 10, std::vector<double>(100, 0.6), GeoTransform(0, 100, 10, 10), CrsTag::projected(),
                 kDefaultNodata);
    for (std::size_t c = 0; c < 10; ++c) g(c, 0) = 0.7;
    const std::vector<Zone> zones{rect("b", 0, 0, 100, 100), rect("a", 0, 0, 100, 100), rect("out", 500, 500, 600, 600)};
    ThresholdSet ts;
    ts.set({"a", Sensor::modis, 0.65});
    const std::vector<SensorRaster> rasters{{Sensor::sentinel2, "s2", &g}, {Sensor::modis, "m", &g}};
    const auto entries = run_report(rasters, zones, ts);
    ASSERT_EQ(entries.size(), 6u);
    EXPECT_EQ(entries[0].zone_id, "a");
    EXPECT_EQ(entries[0].sensor, Sensor::modis);
    EXPECT_EQ(entries[1].sensor, Sensor::sentinel2);
    EXPECT_EQ(entries[2].zone_id, "b");
    EXPECT_EQ(entries[4].zone_id, "out");
    EXPECT_FALSE(entries[4].result);
    EXPECT_NE(entries[4].error.find("outside"), std::string::npos);
    // per-zone threshold wins over the sensor default
    EXPECT_EQ(entries[0].result->threshold, 0.65);
    EXPECT_EQ(entries[0].result->pixels_veg, 10u);
    EXPECT_EQ(entries[2].result->threshold, 0.58);
    EXPECT_EQ(entries[2].result->pixels_veg, 100u);
    EXPECT_EQ(entries[1].result->threshold, 0.40);
    EXPECT_EQ(entries[0].result->raster_id, "m");
}

TEST(Rank, PublishedResultsOrder) {
    const auto rows = parse_results_table(read_file_text(gz_test::fixture("table3.csv")));
    const auto all = results_table_as_zonal(rows);
    const auto modis = rank_zones(all, Sensor::modis, RankKey::veg_pct);
    ASSERT_EQ(modis.size(), 41u);
    EXPECT_EQ(modis.front().zone_id, "resita");
    EXPECT_EQ(modis.back().zone_id, "drobeta-turnu-severin");
    const auto km2 = rank_zones(all, Sensor::modis, RankKey::veg_km2);
    EXPECT_EQ(km2.front().zone_id, "bucuresti");
    const auto s2 = rank_zones(all, Sensor::sentinel2, RankKey::veg_pct);
    EXPECT_EQ(s2.front().zone_id, "resita");
    EXPECT_EQ(s2.back().zone_id, "drobeta-turnu-severin");

    std::mt19937_64 rng(2);
    auto shuffled = all;
    for (int i = 0; i < 5; ++i) {
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        EXPECT_EQ(rank_zones(shuffled, Sensor::modis, RankKey::veg_pct), modis);
    }
    for (std::size_t i = 1; i < modis.size(); ++i) EXPECT_GE(modis[i - 1].veg_pct, modis[i].veg_pct);
}

TEST(PublishedTables, ValidateBundledTables) {
    const auto t2 = parse_threshold_table(read_file_text(gz_test::fixture("table2.csv")));
    const auto t3 = parse_results_table(read_file_text(gz_test::fixture("table3.csv")));
    EXPECT_EQ(t2.rows.size(), kCountySeatCount);
    EXPECT_EQ(t3.size(), kCountySeatCount);
    const auto v = validate_published_tables(t2, t3);
    EXPECT_TRUE(v.pass());
    EXPECT_EQ(v.rows_passed(), 82u);
    EXPECT_GE(v.modis_mean, 0.575);
    EXPECT_LE(v.modis_mean, 0.585);
    EXPECT_GE(v.sentinel2_mean, 0.39);
    EXPECT_LE(v.sentinel2_mean, 0.405);
    const auto cluj = std::find_if(v.rows.begin(), v.rows.end(), [](const RowCheck& r) { return r.name == "Cluj-Napoca"; });
    ASSERT_NE(cluj, v.rows.end());
    EXPECT_EQ(cluj->rounded_pct, 59);
    bool noted = false;
    for (const auto& n : v.notes) noted |= n.rfind("Cluj-Napoca", 0) == 0;
    EXPECT_TRUE(noted);
}

TEST(PublishedTables, CitySlug) {
    EXPECT_EQ(city_slug("Târgu Mureș"), "targu-mures");
    EXPECT_EQ(city_slug("București"), "bucuresti");
    EXPECT_EQ(city_slug("Drobeta-Turnu Severin"), "drobeta-turnu-severin");
    EXPECT_EQ(city_slug("Piatra Neamţ"), "piatra-neamt");
}

TEST(ResultsCsv, RoundTripAtPrintedPrecision) {
    ZonalResult r;
    r.zone_id = "cluj-napoca";
    r.zone_name = "Cluj-Napoca, centre";
    r.sensor = Sensor::sentinel2;
    r.threshold = 0.45;
    r.total_area_km2 = 93.0912;
    r.veg_area_km2 = 54.951;
    r.veg_pct = 59.03;
    r.nodata_pct = 0.4;
    const std::string text = write_results_csv({r});
    EXPECT_NE(text.find("\"Cluj-Napoca, centre\""), std::string::npos);
    EXPECT_NE(text.find(",0.45,93.09,54.95,59,0"), std::string::npos);
    const auto back = read_results_csv(text);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].zone_name, r.zone_name);
    EXPECT_EQ(back[0].threshold, 0.45);
    EXPECT_EQ(back[0].veg_pct, 59.0);
    EXPECT_THROW(read_results_csv("bad,header\n"), ParseError);
    EXPECT_EQ(format_threshold(0.4), "0.40");
    EXPECT_EQ(format_threshold(0.425), "0.425");
}

TEST(ThresholdSetJson, RoundTripAndValidation) {
    const auto set = ThresholdSet::parse(read_file_text(gz_test::fixture("thresholds_table2.json")));
    EXPECT_EQ(set.records().size(), 82u);
    EXPECT_EQ(set.resolve("cluj-napoca", Sensor::modis), 0.65);
    EXPECT_EQ(set.resolve("nowhere", Sensor::sentinel2), 0.40);
    const auto again = ThresholdSet::from_json(set.to_json());
    EXPECT_EQ(again.records(), set.records());
    EXPECT_THROW(ThresholdSet::parse(R"({"records":[{"zone_id":"a","sensor":"MODIS","threshold":0.5},)"
                                     R"({"zone_id":"a","sensor":"MODIS","threshold":0.6}]})"),
                 ParseError);
    EXPECT_THROW(ThresholdSet::parse(R"({"records":[{"zone_id":"a","sensor":"LANDSAT","threshold":0.5}]})"),
                 DomainError);
    EXPECT_THROW(ThresholdSet::parse(R"({"records":[{"zone_id":"a","sensor":"MODIS","threshold":2}]})"), DomainError);
    EXPECT_THROW(ThresholdSet::parse("[]"), ParseError);
}

TEST(Sweep, BucharestWindowIsMonotone) {
    const auto g = apply_scale(read_raster_file(gz_test::fixture("bucharest_modis_ndvi.tif")), ScaleSpec::modis_ndvi());
    const auto zones = parse_zones(read_file_text(gz_test::fixture("zones_ro.geojson")));
    const Zone* b = find_zone(zones, "bucuresti");
    ASSERT_TRUE(b);
    for (Sensor s : kAllSensors) {
        const auto p = sweep_protocol(s);
        const auto series = sweep(g, *b, p.from, p.to, p.step);
        for (std::size_t i = 1; i < series.points.size(); ++i)
            EXPECT_LE(series.points[i].veg_pct, series.points[i - 1].veg_pct);
    }
}
