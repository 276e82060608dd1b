#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "greenzonal/ndvi.hpp"
#include "greenzonal/raster_io.hpp"
#include "greenzonal/zonal.hpp"
#include "test_support.hpp"

using namespace greenzonal;

namespace {

const GeoTransform kGt(0.0, 100.0, 10.0, 10.0);

RasterGrid grid_of(std::vector<double> v, std::size_t w, std::optional<double> nodata = kDefaultNodata,
                   BandKind band = BandKind::other()) {
    const std::size_t h = v.size() / w;
    return RasterGrid(w, h, std::move(v), kGt, CrsTag::projected(), nodata, SampleType::float64, band);
}

} // namespace

TEST(Ndvi, MatchesClosedForm) {
    const auto red = grid_of({0.1, 0.2, 0.05, 0.3}, 2);
    const auto nir = grid_of({0.5, 0.2, 0.45, 0.1}, 2);
    const auto n = ndvi(red, nir);
    EXPECT_DOUBLE_EQ(n(0, 0), (0.5 - 0.1) / (0.5 + 0.1));
    EXPECT_EQ(n(1, 0), 0.0);
    EXPECT_DOUBLE_EQ(n(1, 1), (0.1 - 0.3) / (0.1 + 0.3));
    EXPECT_EQ(n.band().kind, BandKind::Kind::ndvi);
    EXPECT_EQ(n.nodata(), kDefaultNodata);
}

TEST(Ndvi, ZeroSumNodataAndNegativeInputsBecomeNodata) {
    const auto red = grid_of({0.0, kDefaultNodata, 0.1, -0.1}, 2);
    const auto nir = grid_of({0.0, 0.4, kDefaultNodata, 0.3}, 2);
    const auto n = ndvi(red, nir);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(n.is_nodata(n.samples()[i])) << i;
}

TEST(Ndvi, GeometryMismatch) {
    const auto a = grid_of({1, 2, 3, 4}, 2);
    const auto b = grid_of({1, 2, 3, 4}, 4);
    EXPECT_THROW(ndvi(a, b), MismatchError);
    RasterGrid c(2, 2, GeoTransform(5.0, 100.0, 10.0, 10.0));
    EXPECT_THROW(ndvi(a, c), MismatchError);
}

TEST(Ndvi, PropertiesOnRandomReflectances) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> r(10000), n(10000);
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = u(rng) < 0.01 ? 0.0 : u(rng);
        n[i] = r[i] == 0.0 && u(rng) < 0.5 ? 0.0 : u(rng);
    }
    const auto red = grid_of(r, 100), nir = grid_of(n, 100);
    const auto fwd = ndvi(red, nir), rev = ndvi(nir, red);
    std::size_t zero_sums = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double a = fwd.samples()[i], b = rev.samples()[i];
        if (r[i] + n[i] == 0.0) {
            ++zero_sums;
            EXPECT_TRUE(fwd.is_nodata(a));
            continue;
        }
        EXPECT_GE(a, -1.0);
        EXPECT_LE(a, 1.0);
        EXPECT_EQ(a, -b);
    }
    EXPECT_GT(zero_sums, 0u);
}

TEST(Ndvi, ClassificationIsScaleInvariant) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.01, 0.6);
    std::vector<double> r(4096), n(4096);
    for (auto& v : r) v = u(rng);
    for (auto& v : n) v = u(rng);
    auto count_veg = [](const RasterGrid& g, double t) {
        const auto c = classify(g, t);
        return std::count(c.samples().begin(), c.samples().end(), 1.0);
    };
    const auto base = ndvi(grid_of(r, 64), grid_of(n, 64));
    for (double k : {10000.0, 0.5, 3.0}) {
        std::vector<double> rs(r), ns(n);
        for (auto& v : rs) v = std::round(v * k * 1e6) / 1e6;
        for (auto& v : ns) v = std::round(v * k * 1e6) / 1e6;
        const auto scaled = ndvi(grid_of(rs, 64), grid_of(ns, 64));
        for (double t : {-0.2, 0.0, 0.3, 0.4, 0.58})
            EXPECT_NEAR(double(count_veg(base, t)), double(count_veg(scaled, t)), 2.0) << k << " " << t;
    }
    // exact powers of two scale without rounding at all
    std::vector<double> r4(r), n4(n);
    for (auto& v : r4) v *= 4.0;
    for (auto& v : n4) v *= 4.0;
    EXPECT_EQ(ndvi(grid_of(r4, 64), grid_of(n4, 64)), base);
}

TEST(ApplyScale, ModisPreset) {
    const auto raw = grid_of({5800, -3000, 10000, -2000, -2500, 12000, 4001}, 7, std::nullopt);
    const auto s = apply_scale(raw, ScaleSpec::modis_ndvi());
    EXPECT_EQ(s(0, 0), 0.58);
    EXPECT_TRUE(s.is_nodata_at(1, 0));
    EXPECT_EQ(s(2, 0), 1.0);
    EXPECT_EQ(s(3, 0), -0.2);
    EXPECT_TRUE(s.is_nodata_at(4, 0));
    EXPECT_TRUE(s.is_nodata_at(5, 0));
    EXPECT_EQ(s(6, 0), 0.4001);
    // a raw 5800 sits exactly on the MODIS default and is not vegetation
    EXPECT_FALSE(is_vegetation(s(0, 0), default_threshold(Sensor::modis)));
}

TEST(ApplyScale, InvalidSpec) {
    const auto raw = grid_of({1, 2}, 2);
    EXPECT_THROW(apply_scale(raw, ScaleSpec{0.0, 0, 0, 1}), DomainError);
    EXPECT_THROW(apply_scale(raw, ScaleSpec{1.0, 0, 5, 1}), DomainError);
}

TEST(Classify, StrictGreaterThan) {
    const auto g = grid_of({0.39, 0.4, 0.41, kDefaultNodata}, 4, kDefaultNodata, BandKind::ndvi());
    const auto c = classify(g, 0.4);
    EXPECT_EQ(c(0, 0), 0.0);
    EXPECT_EQ(c(1, 0), 0.0);
    EXPECT_EQ(c(2, 0), 1.0);
    EXPECT_TRUE(c.is_nodata_at(3, 0));
    EXPECT_THROW(classify(g, 1.5), DomainError);
}

TEST(Classify, MonotoneInThreshold) {
    std::mt19937_64 rng(1);
    const auto g = gz_test::random_ndvi_grid(rng, 50, 40, kGt);
    std::ptrdiff_t prev = -1;
    for (int k = 20; k >= -20; --k) {
        const auto c = classify(g, k * 0.05);
        const auto veg = std::count(c.samples().begin(), c.samples().end(), 1.0);
        EXPECT_GE(veg, prev);
        prev = veg;
    }
}

TEST(Composite, LawsOnRandomStacks) {
    std::mt19937_64 rng(77);
    std::vector<RasterGrid> stack;
    for (int i = 0; i < 5; ++i) stack.push_back(gz_test::random_ndvi_grid(rng, 30, 20, kGt, 0.3));
    const auto m = max_composite(stack);
    EXPECT_EQ(max_composite(std::vector<RasterGrid>{m, m}), m);
    auto perm = stack;
    for (int i = 0; i < 10; ++i) {
        std::shuffle(perm.begin(), perm.end(), rng);
        EXPECT_EQ(max_composite(perm), m);
    }
    // associativity
    const auto left = max_composite(std::vector<RasterGrid>{max_composite(std::vector<RasterGrid>{stack[0], stack[1]}),
                                                           max_composite(std::vector<RasterGrid>{stack[2], stack[3], stack[4]})});
    EXPECT_EQ(left, m);
    for (std::size_t i = 0; i < m.size(); ++i) {
        bool all_nodata = true;
        for (const auto& g : stack) {
            const double v = g.samples()[i];
            if (g.is_nodata(v)) continue;
            all_nodata = false;
            EXPECT_GE(m.samples()[i], v);
        }
        EXPECT_EQ(m.is_nodata(m.samples()[i]), all_nodata);
    }
}

TEST(Composite, Errors) {
    EXPECT_THROW(max_composite(std::vector<RasterGrid>{}), DomainError);
    EXPECT_THROW(max_composite(std::vector<RasterGrid>{grid_of({1, 2}, 2), grid_of({1, 2}, 1)}), MismatchError);
}

TEST(Histogram, EdgesAndConservation) {
    Histogram h;
    EXPECT_EQ(h.bin_edges.front(), -1.0);
    EXPECT_EQ(h.bin_edges.back(), 1.0);
    EXPECT_EQ(h.bin_of(-1.0), 0u);
    EXPECT_EQ(h.bin_of(1.0), Histogram::kBins - 1);
    EXPECT_EQ(h.bin_of(0.0), 25u);
    EXPECT_EQ(h.bin_of(0.04), 26u);
    EXPECT_EQ(h.bin_of(0.48), 37u);
    EXPECT_EQ(h.bin_of(0.4799999), 36u);
    EXPECT_FALSE(h.bin_of(1.01).has_value());
    for (std::size_t i = 0; i < Histogram::kBins; ++i) {
        EXPECT_EQ(h.bin_of(h.bin_edges[i]), i);
        EXPECT_NEAR(h.bin_center(i), -0.98 + 0.04 * double(i), 1e-12);
    }

    std::mt19937_64 rng(4);
    const auto g = gz_test::random_ndvi_grid(rng, 64, 64, kGt, 0.1);
    const auto hist = histogram(g);
    EXPECT_EQ(hist.total(), g.size());
    std::size_t nodata = 0;
    for (double v : g.samples()) nodata += g.is_nodata(v);
    EXPECT_EQ(hist.excluded, nodata);
}

TEST(Histogram, ZoneRestricted) {
    RasterGrid g(4, 4, std::vector<double>(16, 0.5), GeoTransform(0, 4, 1, 1), CrsTag::projected(), kDefaultNodata);
    g(0, 0) = kDefaultNodata;
    Zone z;
    z.id = "q";
    z.polygons.push_back({{{0, 2}, {2, 2}, {2, 4}, {0, 4}, {0, 2}}, {}});
    const auto h = histogram(g, z);
    EXPECT_EQ(h.total(), 4u);
    EXPECT_EQ(h.excluded, 1u);
    EXPECT_EQ(h.counts[*h.bin_of(0.5)], 3u);
}

TEST(Histogram, BucharestWindowsPeakWhereExpected) {
    const auto modis = apply_scale(read_raster_file(gz_test::fixture("bucharest_modis_ndvi.tif")), ScaleSpec::modis_ndvi());
    const auto hm = histogram(modis);
    const double cm = hm.bin_center(hm.modal_bin());
    EXPECT_GE(cm, 0.46);
    EXPECT_LE(cm, 0.54);

    const auto s2 = ndvi(read_raster_file(gz_test::fixture("bucharest_s2_red.tif")),
                         read_raster_file(gz_test::fixture("bucharest_s2_nir.tif")));
    const auto hs = histogram(s2);
    const double cs = hs.bin_center(hs.modal_bin());
    EXPECT_GE(cs, 0.30);
    EXPECT_LE(cs, 0.42);
}
