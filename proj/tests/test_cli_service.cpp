#include <sstream>
#include <thread>

#include <gtest/gtest.h>
#include <png.h>

#include "greenzonal/cli.hpp"
#include "greenzonal/service.hpp"
#include "test_support.hpp"

using namespace greenzonal;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), "greenzonal");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct Decoded {
    unsigned width = 0, height = 0;
    std::vector<std::uint8_t> rgba;
    Rgba at(unsigned x, unsigned y) const {
        const auto* p = &rgba[(std::size_t(y) * width + x) * 4];
        return {p[0], p[1], p[2], p[3]};
    }
};

Decoded decode_png(const std::vector<std::uint8_t>& bytes) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) throw std::runtime_error(img.message);
    img.format = PNG_FORMAT_RGBA;
    Decoded d;
    d.width = img.width;
    d.height = img.height;
    d.rgba.resize(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, d.rgba.data(), 0, nullptr)) throw std::runtime_error(img.message);
    return d;
}

// Store with the MODIS Bucharest window, a small synthetic grid and the
// 41 city zones plus one zone over the synthetic grid.
class ServiceStore : public ::testing::Test {
protected:
    void SetUp() override {
        store.init();
        modis = apply_scale(read_raster_file(gz_test::fixture("bucharest_modis_ndvi.tif")), ScaleSpec::modis_ndvi());
        store.put_raster("bucharest-modis", Sensor::modis, modis);

        small = RasterGrid(6, 4, std::vector<double>{0.9, 0.9, 0.2, 0.2, 0.5, kDefaultNodata,  //
                                                     0.9, 0.9, 0.2, 0.2, 0.5, 0.5,             //
                                                     0.1, 0.3, 0.45, 0.6, 0.7, 0.8,            //
                                                     -0.5, 0.0, 0.41, 0.39, 1.0, -1.0},
                           GeoTransform(0, 40, 10, 10), CrsTag::projected(), kDefaultNodata, SampleType::float64,
                           BandKind::ndvi());
        store.put_raster("small", Sensor::sentinel2, small);

        zones = parse_zones(read_file_text(gz_test::fixture("zones_ro.geojson")));
        Zone z;
        z.id = "block";
        z.name = "Block";
        z.polygons.push_back({{{0, 0}, {30, 0}, {30, 40}, {0, 40}, {0, 0}}, {}});
        zones.push_back(z);
        store.put_zones(zones);
    }

    gz_test::TempDir dir;
    Store store{dir.path() / "store"};
    RasterGrid modis, small;
    std::vector<Zone> zones;
};

int http_status(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return detail::status_for(e);
    }
    return 200;
}

} // namespace

TEST(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(cli({}).code, 1);
    EXPECT_EQ(cli({"zonal"}).code, 1);
    EXPECT_EQ(cli({"frobnicate"}).code, 1);
    EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, DataErrorsExitTwo) {
    gz_test::TempDir d;
    const auto r = cli({"--store", d.path().string(), "ndvi", "--red", (d / "missing.asc").string(), "--nir",
                        (d / "x.asc").string(), "--out", (d / "o.asc").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("missing.asc"), std::string::npos);
}

TEST(Cli, NdviFromFixtureBands) {
    gz_test::TempDir d;
    const auto out = (d / "ndvi.tif").string();
    const auto r = cli({"ndvi", "--red", gz_test::fixture("bucharest_s2_red.tif").string(), "--nir",
                        gz_test::fixture("bucharest_s2_nir.tif").string(), "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto want = ndvi(read_raster_file(gz_test::fixture("bucharest_s2_red.tif")),
                           read_raster_file(gz_test::fixture("bucharest_s2_nir.tif")));
    const auto got = read_raster_file(out);
    ASSERT_EQ(got.size(), want.size());
    // the GeoTIFF writer stores NDVI as float32
    EXPECT_EQ(got.sample_type(), SampleType::float32);
    for (std::size_t i = 0; i < got.size(); ++i)
        ASSERT_EQ(got.samples()[i], double(float(want.samples()[i]))) << i;
}

TEST(Cli, CompositeAndHistogram) {
    gz_test::TempDir d;
    std::mt19937_64 rng(9);
    const GeoTransform gt(0, 100, 10, 10);
    const auto a = gz_test::random_ndvi_grid(rng, 10, 10, gt), b = gz_test::random_ndvi_grid(rng, 10, 10, gt);
    write_raster_file(d / "a.asc", a);
    write_raster_file(d / "b.asc", b);
    ASSERT_EQ(cli({"composite", "--inputs", (d / "a.asc").string() + "," + (d / "b.asc").string(), "--out",
                   (d / "m.asc").string()})
                  .code,
              0);
    EXPECT_EQ(read_raster_file(d / "m.asc").samples().size(), 100u);
    const auto want = max_composite(std::vector<RasterGrid>{a, b});
    const auto got = read_raster_file(d / "m.asc");
    for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(got.samples()[i], want.samples()[i]);

    const auto h = cli({"hist", "--raster", (d / "m.asc").string()});
    ASSERT_EQ(h.code, 0) << h.err;
    EXPECT_EQ(h.out.rfind("bin_lo,bin_hi,count\n", 0), 0u);
    EXPECT_NE(h.out.find("# modal_bin_center="), std::string::npos);
}

TEST_F(ServiceStore, CliZonalMatchesLibrary) {
    const auto r = cli({"--store", store.root().string(), "--quiet", "zonal", "--raster", "bucharest-modis"});
    ASSERT_EQ(r.code, 0) << r.err;
    // only Bucharest lies inside this window
    ZonalResult want = zonal_vegetation(modis, *find_zone(zones, "bucuresti"), 0.58, "bucharest-modis", Sensor::modis);
    EXPECT_EQ(r.out, write_results_csv({want}));

    const auto fine = cli({"--store", store.root().string(), "--quiet", "zonal", "--raster", "bucharest-modis",
                           "--threshold", "0.575"});
    EXPECT_EQ(fine.code, 1);
    EXPECT_NE(fine.err.find("--fine"), std::string::npos);
    const auto ok = cli({"--store", store.root().string(), "--quiet", "zonal", "--raster", "bucharest-modis",
                         "--threshold", "0.575", "--fine"});
    EXPECT_EQ(ok.code, 0);
    EXPECT_NE(ok.out.find(",0.575,"), std::string::npos);
}

TEST_F(ServiceStore, CliSweepAndRank) {
    const auto s = cli({"--store", store.root().string(), "sweep", "--raster", "bucharest-modis", "--zone", "bucuresti"});
    ASSERT_EQ(s.code, 0) << s.err;
    EXPECT_EQ(std::count(s.out.begin(), s.out.end(), '\n'), 6);
    EXPECT_EQ(s.out.rfind("threshold,veg_pct,veg_km2\n0.50,", 0), 0u);

    const auto rows = parse_results_table(read_file_text(gz_test::fixture("table3.csv")));
    write_file_atomic(dir / "res.csv", write_results_csv(results_table_as_zonal(rows)));
    const auto rk = cli({"rank", "--results", (dir / "res.csv").string(), "--sensor", "MODIS"});
    ASSERT_EQ(rk.code, 0) << rk.err;
    EXPECT_EQ(rk.out.substr(0, rk.out.find('\n', rk.out.find('\n') + 1)), "rank,zone_id,name,veg_pct\n1,resita,Reșița,62");
}

TEST(Cli, ValidatePaperTables) {
    const auto r = cli({"validate-paper", "--table2", gz_test::fixture("table2.csv").string(), "--table3",
                        gz_test::fixture("table3.csv").string()});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("82/82 rows, 41/41 cities"), std::string::npos);
}

TEST(Cli, IngestRasterZonesAndThresholds) {
    gz_test::TempDir d;
    const std::string st = (d / "s").string();
    ASSERT_EQ(cli({"--store", st, "--quiet", "ingest", "--input", gz_test::fixture("bucharest_modis_ndvi.tif").string(),
                   "--sensor", "MODIS", "--id", "m"})
                  .code,
              0);
    ASSERT_EQ(cli({"--store", st, "ingest", "--input", gz_test::fixture("zones_ro.geojson").string()}).code, 0);
    ASSERT_EQ(cli({"--store", st, "ingest", "--input", gz_test::fixture("thresholds_table2.json").string()}).code, 0);
    const Store s(st);
    const auto g = s.load_raster("m");
    EXPECT_EQ(g.band().kind, BandKind::Kind::ndvi);
    const auto want = apply_scale(read_raster_file(gz_test::fixture("bucharest_modis_ndvi.tif")), ScaleSpec::modis_ndvi());
    for (std::size_t i = 0; i < g.size(); ++i) ASSERT_EQ(g.samples()[i], want.samples()[i]);
    EXPECT_EQ(s.zones().size(), 41u);
    EXPECT_EQ(s.thresholds().records().size(), 82u);
    EXPECT_EQ(cli({"--store", st, "ingest", "--input", gz_test::fixture("bucharest_modis_ndvi.tif").string()}).code, 1);
}

TEST_F(ServiceStore, ZonesAndRasters) {
    Service svc(store);
    const auto z = svc.zones_json();
    EXPECT_EQ(z.size(), 42u);
    EXPECT_EQ(z[0]["id"], "alba-iulia");
    EXPECT_EQ(z[0]["bbox"].size(), 4u);
    const auto r = svc.rasters_json();
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0]["id"], "bucharest-modis");
    EXPECT_EQ(r[1]["sensor"], "SENTINEL2");
}

TEST_F(ServiceStore, StatsEqualLibraryCall) {
    Service svc(store);
    const Zone& b = *find_zone(zones, "bucuresti");
    EXPECT_EQ(svc.stats_json("bucuresti", "bucharest-modis", 0.6).dump(),
              to_json(zonal_vegetation(modis, b, 0.6, "bucharest-modis", Sensor::modis)).dump());
    // default threshold, then the stored one
    EXPECT_EQ(svc.stats_json("bucuresti", "bucharest-modis", std::nullopt)["threshold"], 0.58);
    svc.put_threshold("bucuresti", R"({"sensor":"MODIS","threshold":0.65})");
    EXPECT_EQ(svc.stats_json("bucuresti", "bucharest-modis", std::nullopt).dump(),
              to_json(zonal_vegetation(modis, b, 0.65, "bucharest-modis", Sensor::modis)).dump());

    EXPECT_EQ(http_status([&] { svc.stats_json("cluj-napoca", "bucharest-modis", 0.5); }), 409);
    EXPECT_EQ(http_status([&] { svc.stats_json("atlantis", "bucharest-modis", 0.5); }), 404);
    EXPECT_EQ(http_status([&] { svc.stats_json("bucuresti", "nope", 0.5); }), 404);
    EXPECT_EQ(http_status([&] { svc.stats_json("bucuresti", "", 0.5); }), 400);
    EXPECT_EQ(http_status([&] { svc.stats_json("bucuresti", "bucharest-modis", 3.0); }), 400);

    const auto sw = svc.sweep_json("bucuresti", "bucharest-modis", std::nullopt, std::nullopt, std::nullopt);
    EXPECT_EQ(sw["points"].size(), 5u);
    EXPECT_EQ(svc.sweep_json("block", "small", std::nullopt, std::nullopt, std::nullopt)["points"].size(), 7u);
}

TEST_F(ServiceStore, PutThresholdValidatesAndPersists) {
    Service svc(store);
    EXPECT_EQ(http_status([&] { svc.put_threshold("cluj-napoca", R"({"sensor":"MODIS","threshold":0.62})"); }), 400);
    EXPECT_EQ(http_status([&] { svc.put_threshold("cluj-napoca", R"({"sensor":"LANDSAT","threshold":0.6})"); }), 400);
    EXPECT_EQ(http_status([&] { svc.put_threshold("cluj-napoca", R"({"threshold":0.6})"); }), 400);
    EXPECT_EQ(http_status([&] { svc.put_threshold("cluj-napoca", "not json"); }), 400);
    EXPECT_EQ(http_status([&] { svc.put_threshold("cluj-napoca", R"({"sensor":"MODIS","threshold":1.05})"); }), 400);
    EXPECT_EQ(http_status([&] { svc.put_threshold("nowhere", R"({"sensor":"MODIS","threshold":0.6})"); }), 404);

    // 0.1 + 0.55 is not exactly 0.65 in binary; it is snapped onto the grid
    const auto rec = svc.put_threshold("cluj-napoca", nlohmann::json{{"sensor", "MODIS"}, {"threshold", 0.1 + 0.55}}.dump());
    EXPECT_EQ(rec["threshold"], 0.65);
    svc.put_threshold("cluj-napoca", R"({"sensor":"SENTINEL2","threshold":0.45})");
    svc.put_threshold("cluj-napoca", R"({"sensor":"SENTINEL2","threshold":0.5})");

    const auto saved = ThresholdSet::parse(read_file_text(store.thresholds_path()));
    EXPECT_EQ(saved.records().size(), 2u);
    EXPECT_EQ(saved.find("cluj-napoca", Sensor::modis), 0.65);
    EXPECT_EQ(saved.find("cluj-napoca", Sensor::sentinel2), 0.5);
    const auto listed = svc.thresholds_json();
    EXPECT_EQ(listed["records"].size(), 2u);
    EXPECT_EQ(listed["defaults"]["MODIS"], 0.58);
    for (const auto& e : fs::directory_iterator(store.root()))
        EXPECT_EQ(e.path().filename().string().find(".tmp"), std::string::npos) << e.path();

    // a fresh service sees the persisted value
    Service again(store);
    EXPECT_EQ(again.thresholds_json()["records"].size(), 2u);
}

TEST_F(ServiceStore, MaskPngMatchesClassification) {
    Service svc(store);
    const auto png = decode_png(svc.mask_png("small", 0.4, std::nullopt, std::nullopt));
    ASSERT_EQ(png.width, 6u);
    ASSERT_EQ(png.height, 4u);
    for (unsigned y = 0; y < 4; ++y)
        for (unsigned x = 0; x < 6; ++x) {
            const double v = small(x, y);
            const Rgba want = small.is_nodata(v) ? kNodataColor : v > 0.4 ? kVegetationColor : kNonVegetationColor;
            EXPECT_EQ(png.at(x, y), want) << x << "," << y;
        }
    // zone restriction: the block covers the first three columns only
    const auto zoned = decode_png(svc.mask_png("small", 0.4, std::string("block"), std::nullopt));
    EXPECT_EQ(zoned.at(0, 0), kVegetationColor);
    EXPECT_EQ(zoned.at(4, 0), kOutsideZoneColor);
    // all-vegetation window
    const auto win = decode_png(svc.mask_png("small", 0.4, std::nullopt, std::string("0,0,2,2")));
    ASSERT_EQ(win.width, 2u);
    for (unsigned y = 0; y < 2; ++y)
        for (unsigned x = 0; x < 2; ++x) EXPECT_EQ(win.at(x, y), kVegetationColor);

    EXPECT_EQ(http_status([&] { svc.mask_png("small", 0.4, std::nullopt, std::string("10,10,2,2")); }), 409);
    EXPECT_EQ(http_status([&] { svc.mask_png("small", 0.4, std::nullopt, std::string("0,0,-1,2")); }), 400);
    EXPECT_EQ(http_status([&] { svc.mask_png("small", 0.4, std::nullopt, std::string("0,0,2")); }), 400);

    const auto preview = decode_png(svc.preview_png("bucharest-modis", std::string("10,20,30,40")));
    EXPECT_EQ(preview.width, 30u);
    EXPECT_EQ(preview.height, 40u);
}

TEST_F(ServiceStore, OverHttp) {
    Service svc(store);
    const int port = svc.bind("127.0.0.1", 0);
    std::thread t([&] { svc.listen(); });
    svc.wait_until_ready();
    httplib::Client c("127.0.0.1", port);

    auto res = c.Get("/api/zones");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
    EXPECT_EQ(nlohmann::json::parse(res->body).size(), 42u);

    res = c.Get("/api/zones/bucuresti/stats?raster=bucharest-modis&threshold=0.55");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->body, svc.stats_json("bucuresti", "bucharest-modis", 0.55).dump());

    res = c.Get("/api/zones/bucuresti/stats?raster=bucharest-modis&threshold=abc");
    EXPECT_EQ(res->status, 400);
    EXPECT_TRUE(nlohmann::json::parse(res->body).contains("error"));
    res = c.Get("/api/zones/iasi/stats?raster=bucharest-modis");
    EXPECT_EQ(res->status, 409);
    res = c.Get("/api/nothing");
    EXPECT_EQ(res->status, 404);

    res = c.Put("/api/thresholds/cluj-napoca", R"({"sensor":"MODIS","threshold":0.65})", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    res = c.Get("/api/thresholds");
    EXPECT_EQ(nlohmann::json::parse(res->body)["records"][0]["threshold"], 0.65);

    res = c.Get("/api/rasters/small/mask.png?threshold=0.4");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
    EXPECT_EQ(decode_png(std::vector<std::uint8_t>(res->body.begin(), res->body.end())).width, 6u);

    res = c.Options("/api/thresholds/cluj-napoca");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 204);

    svc.stop();
    t.join();
}
