#pragma once

// Constrained GeoTIFF profile:
//   * classic TIFF (not BigTIFF), either byte order, exactly one IFD
//   * one sample per pixel, int16 / uint16 / float32
//   * strips or tiles, Compression 1 (none) or 8 (Deflate), no predictor
//   * georeferencing from ModelPixelScale (33550) + a single
//     ModelTiepoint (33922), or an axis-aligned ModelTransformation (34264)
//   * CRS recognized from GeoKeyDirectory (34735) when possible
//   * nodata from the GDAL_NODATA ASCII tag (42113)
// Anything else is rejected with an error naming the tag or offset.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "greenzonal/ascii_grid.hpp"
#include "greenzonal/error.hpp"
#include "greenzonal/raster.hpp"

namespace greenzonal {

namespace tiff_tag {
inline constexpr std::uint16_t image_width = 256;
inline constexpr std::uint16_t image_length = 257;
inline constexpr std::uint16_t bits_per_sample = 258;
inline constexpr std::uint16_t compression = 259;
inline constexpr std::uint16_t photometric = 262;
inline constexpr std::uint16_t strip_offsets = 273;
inline constexpr std::uint16_t samples_per_pixel = 277;
inline constexpr std::uint16_t rows_per_strip = 278;
inline constexpr std::uint16_t strip_byte_counts = 279;
inline constexpr std::uint16_t planar_config = 284;
inline constexpr std::uint16_t predictor = 317;
inline constexpr std::uint16_t tile_width = 322;
inline constexpr std::uint16_t tile_length = 323;
inline constexpr std::uint16_t tile_offsets = 324;
inline constexpr std::uint16_t tile_byte_counts = 325;
inline constexpr std::uint16_t sample_format = 339;
inline constexpr std::uint16_t model_pixel_scale = 33550;
inline constexpr std::uint16_t model_tiepoint = 33922;
inline constexpr std::uint16_t model_transformation = 34264;
inline constexpr std::uint16_t geo_key_directory = 34735;
inline constexpr std::uint16_t geo_double_params = 34736;
inline constexpr std::uint16_t geo_ascii_params = 34737;
inline constexpr std::uint16_t gdal_nodata = 42113;
} // namespace tiff_tag

namespace geokey {
inline constexpr std::uint16_t model_type = 1024;
inline constexpr std::uint16_t raster_type = 1025;
inline constexpr std::uint16_t geographic_type = 2048;
inline constexpr std::uint16_t semi_major_axis = 2057;
inline constexpr std::uint16_t semi_minor_axis = 2058;
inline constexpr std::uint16_t projected_cs_type = 3072;
inline constexpr std::uint16_t projection = 3074;
inline constexpr std::uint16_t coord_trans = 3075;
inline constexpr std::uint16_t linear_units = 3076;

inline constexpr std::uint16_t model_projected = 1;
inline constexpr std::uint16_t model_geographic = 2;
inline constexpr std::uint16_t raster_pixel_is_point = 2;
inline constexpr std::uint16_t ct_sinusoidal = 24;
inline constexpr std::uint16_t linear_meter = 9001;
inline constexpr std::uint16_t user_defined = 32767;
} // namespace geokey

namespace detail {

class TiffReader {
public:
    explicit TiffReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
        if (bytes_.size() < 8) throw FormatError("file too short for a TIFF header");
        if (bytes_[0] == 'I' && bytes_[1] == 'I')
            big_endian_ = false;
        else if (bytes_[0] == 'M' && bytes_[1] == 'M')
            big_endian_ = true;
        else
            throw FormatError("bad TIFF byte-order mark at offset 0");
        const auto magic = u16(2);
        if (magic == 43) throw FormatError("BigTIFF is not supported (magic 43 at offset 2)");
        if (magic != 42) throw FormatError("bad TIFF magic " + std::to_string(magic) + " at offset 2");
    }

    bool big_endian() const noexcept { return big_endian_; }
    std::size_t size() const noexcept { return bytes_.size(); }
    std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }

    void need(std::uint64_t offset, std::uint64_t len, const std::string& what) const {
        if (offset > bytes_.size() || len > bytes_.size() - offset)
            throw FormatError("truncated " + what + " at offset " + std::to_string(offset));
    }

    std::uint16_t u16(std::uint64_t off) const {
        need(off, 2, "data");
        const auto* p = bytes_.data() + off;
        return big_endian_ ? static_cast<std::uint16_t>(p[0] << 8 | p[1])
                           : static_cast<std::uint16_t>(p[1] << 8 | p[0]);
    }
    std::uint32_t u32(std::uint64_t off) const {
        need(off, 4, "data");
        const auto* p = bytes_.data() + off;
        if (big_endian_)
            return std::uint32_t(p[0]) << 24 | std::uint32_t(p[1]) << 16 | std::uint32_t(p[2]) << 8 | p[3];
        return std::uint32_t(p[3]) << 24 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[1]) << 8 | p[0];
    }
    std::uint64_t u64(std::uint64_t off) const {
        const std::uint64_t a = u32(off), b = u32(off + 4);
        return big_endian_ ? (a << 32 | b) : (b << 32 | a);
    }

private:
    std::span<const std::uint8_t> bytes_;
    bool big_endian_ = false;
};

struct TiffEntry {
    std::uint16_t tag = 0;
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::uint64_t data_offset = 0; // where the values live
};

inline std::size_t tiff_type_size(std::uint16_t type) {
    switch (type) {
    case 1: case 2: case 6: case 7: return 1;
    case 3: case 8: return 2;
    case 4: case 9: case 11: return 4;
    case 5: case 10: case 12: return 8;
    default: return 0;
    }
}

inline std::vector<double> entry_numbers(const TiffReader& r, const TiffEntry& e) {
    const std::size_t sz = tiff_type_size(e.type);
    if (sz == 0 || e.type == 2 || e.type == 7)
        throw FormatError("tag " + std::to_string(e.tag) + " has non-numeric type " + std::to_string(e.type));
    r.need(e.data_offset, std::uint64_t(sz) * e.count, "tag " + std::to_string(e.tag) + " values");
    std::vector<double> out;
    out.reserve(e.count);
    for (std::uint32_t i = 0; i < e.count; ++i) {
        const std::uint64_t off = e.data_offset + std::uint64_t(i) * sz;
        switch (e.type) {
        case 1: out.push_back(r.bytes()[off]); break;
        case 6: out.push_back(static_cast<std::int8_t>(r.bytes()[off])); break;
        case 3: out.push_back(r.u16(off)); break;
        case 8: out.push_back(static_cast<std::int16_t>(r.u16(off))); break;
        case 4: out.push_back(r.u32(off)); break;
        case 9: out.push_back(static_cast<std::int32_t>(r.u32(off))); break;
        case 5: out.push_back(double(r.u32(off)) / double(r.u32(off + 4))); break;
        case 10:
            out.push_back(double(static_cast<std::int32_t>(r.u32(off))) /
                          double(static_cast<std::int32_t>(r.u32(off + 4))));
            break;
        case 11: out.push_back(std::bit_cast<float>(r.u32(off))); break;
        case 12: out.push_back(std::bit_cast<double>(r.u64(off))); break;
        }
    }
    return out;
}

inline std::vector<std::uint64_t> entry_offsets(const TiffReader& r, const TiffEntry& e) {
    if (e.type != 3 && e.type != 4)
        throw FormatError("tag " + std::to_string(e.tag) + " must be SHORT or LONG");
    std::vector<std::uint64_t> out;
    for (double v : entry_numbers(r, e)) out.push_back(static_cast<std::uint64_t>(v));
    return out;
}

inline std::string entry_ascii(const TiffReader& r, const TiffEntry& e) {
    if (e.type != 2) throw FormatError("tag " + std::to_string(e.tag) + " must be ASCII");
    r.need(e.data_offset, e.count, "tag " + std::to_string(e.tag) + " string");
    std::string s(reinterpret_cast<const char*>(r.bytes().data() + e.data_offset), e.count);
    while (!s.empty() && (s.back() == '\0' || s.back() == ' ')) s.pop_back();
    return s;
}

inline std::vector<std::uint8_t> inflate_block(std::span<const std::uint8_t> src, std::size_t expected,
                                               std::uint64_t offset) {
    std::vector<std::uint8_t> out(expected);
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) throw FormatError("zlib initialisation failed");
    zs.next_in = const_cast<Bytef*>(src.data());
    zs.avail_in = static_cast<uInt>(src.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const std::size_t produced = out.size() - zs.avail_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END && !(rc == Z_BUF_ERROR && produced == expected) && !(rc == Z_OK && produced == expected))
        throw FormatError("corrupt or truncated Deflate block at offset " + std::to_string(offset));
    if (produced < expected)
        throw FormatError("truncated Deflate block at offset " + std::to_string(offset) + " (" +
                          std::to_string(produced) + " of " + std::to_string(expected) + " bytes)");
    return out;
}

struct GeoKeys {
    std::map<std::uint16_t, double> values;
};

inline GeoKeys parse_geokeys(const TiffReader& r, const std::map<std::uint16_t, TiffEntry>& tags) {
    GeoKeys keys;
    auto dir_it = tags.find(tiff_tag::geo_key_directory);
    if (dir_it == tags.end()) return keys;
    const auto dir = entry_numbers(r, dir_it->second);
    if (dir.size() < 4) throw FormatError("GeoKeyDirectory (34735) too short");
    const std::size_t n = static_cast<std::size_t>(dir[3]);
    if (dir.size() < 4 + 4 * n) throw FormatError("GeoKeyDirectory (34735) truncated");
    std::vector<double> doubles;
    if (auto it = tags.find(tiff_tag::geo_double_params); it != tags.end()) doubles = entry_numbers(r, it->second);
    for (std::size_t k = 0; k < n; ++k) {
        const auto id = static_cast<std::uint16_t>(dir[4 + 4 * k]);
        const auto location = static_cast<std::uint16_t>(dir[5 + 4 * k]);
        const auto count = static_cast<std::size_t>(dir[6 + 4 * k]);
        const auto value = dir[7 + 4 * k];
        if (location == 0) {
            keys.values[id] = value;
        } else if (location == tiff_tag::geo_double_params) {
            const auto idx = static_cast<std::size_t>(value);
            if (count >= 1 && idx < doubles.size()) keys.values[id] = doubles[idx];
        }
        // ASCII-valued keys (citations) carry no information we use.
    }
    return keys;
}

inline CrsTag crs_from_geokeys(const GeoKeys& keys) {
    auto get = [&](std::uint16_t id) -> std::optional<double> {
        auto it = keys.values.find(id);
        if (it == keys.values.end()) return std::nullopt;
        return it->second;
    };
    const auto model = get(geokey::model_type);
    if (!model) return CrsTag::unknown();
    if (*model == geokey::model_geographic) return CrsTag::geographic();
    if (*model != geokey::model_projected) return CrsTag::unknown();
    if (auto units = get(geokey::linear_units); units && *units != geokey::linear_meter) return CrsTag::unknown();
    if (auto ct = get(geokey::coord_trans); ct && *ct == geokey::ct_sinusoidal) {
        const double radius = get(geokey::semi_major_axis).value_or(kModisSphereRadius);
        return CrsTag::sinusoidal(radius);
    }
    return CrsTag::projected();
}

template <class T>
void store_le_or_be(std::vector<std::uint8_t>& out, T value, bool big_endian) {
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        const std::size_t shift = big_endian ? 8 * (sizeof(T) - 1 - i) : 8 * i;
        out.push_back(static_cast<std::uint8_t>(bits >> shift));
    }
}

} // namespace detail

inline RasterGrid read_geotiff(std::span<const std::uint8_t> bytes) {
    using namespace detail;
    const TiffReader r(bytes);

    const std::uint32_t ifd = r.u32(4);
    r.need(ifd, 2, "IFD");
    const std::uint16_t nentries = r.u16(ifd);
    r.need(ifd + 2, std::uint64_t(nentries) * 12 + 4, "IFD");
    std::map<std::uint16_t, TiffEntry> tags;
    for (std::uint16_t i = 0; i < nentries; ++i) {
        const std::uint64_t off = ifd + 2 + std::uint64_t(i) * 12;
        TiffEntry e{r.u16(off), r.u16(off + 2), r.u32(off + 4), 0};
        const std::size_t total = tiff_type_size(e.type) * e.count;
        e.data_offset = total <= 4 ? off + 8 : r.u32(off + 8);
        tags[e.tag] = e;
    }
    const std::uint64_t next_ifd_offset = ifd + 2 + std::uint64_t(nentries) * 12;
    if (const auto next = r.u32(next_ifd_offset); next != 0)
        throw FormatError("multiple images (next IFD at offset " + std::to_string(next) + ") are not supported");

    auto has = [&](std::uint16_t t) { return tags.count(t) != 0; };
    auto number = [&](std::uint16_t t, std::optional<double> fallback = std::nullopt) -> double {
        auto it = tags.find(t);
        if (it == tags.end()) {
            if (fallback) return *fallback;
            throw FormatError("required tag " + std::to_string(t) + " is missing");
        }
        const auto v = entry_numbers(r, it->second);
        if (v.empty()) throw FormatError("tag " + std::to_string(t) + " is empty");
        for (double x : v)
            if (x != v.front()) throw FormatError("tag " + std::to_string(t) + " has differing per-sample values");
        return v.front();
    };

    const auto width = static_cast<std::size_t>(number(tiff_tag::image_width));
    const auto height = static_cast<std::size_t>(number(tiff_tag::image_length));
    if (width == 0 || height == 0) throw FormatError("zero image dimension (tags 256/257)");

    if (const double spp = number(tiff_tag::samples_per_pixel, 1.0); spp != 1.0)
        throw FormatError("multi-band image: SamplesPerPixel (277) = " + std::to_string(int(spp)));
    const int compression = static_cast<int>(number(tiff_tag::compression, 1.0));
    if (compression != 1 && compression != 8)
        throw FormatError("unsupported Compression (259) = " + std::to_string(compression));
    if (const double pred = number(tiff_tag::predictor, 1.0); pred != 1.0)
        throw FormatError("unsupported Predictor (317) = " + std::to_string(int(pred)));

    const int bits = static_cast<int>(number(tiff_tag::bits_per_sample, 1.0));
    const int format = static_cast<int>(number(tiff_tag::sample_format, 1.0));
    SampleType sample_type;
    if (bits == 16 && format == 2)
        sample_type = SampleType::int16;
    else if (bits == 16 && format == 1)
        sample_type = SampleType::uint16;
    else if (bits == 32 && format == 3)
        sample_type = SampleType::float32;
    else
        throw FormatError("unsupported sample layout: BitsPerSample (258) = " + std::to_string(bits) +
                          ", SampleFormat (339) = " + std::to_string(format));
    const std::size_t bps = static_cast<std::size_t>(bits / 8);

    // Georeferencing.
    double origin_x = 0.0, origin_y = 0.0, scale_x = 1.0, scale_y = 1.0;
    bool georeferenced = false;
    if (has(tiff_tag::model_transformation)) {
        const auto m = entry_numbers(r, tags[tiff_tag::model_transformation]);
        if (m.size() != 16) throw FormatError("ModelTransformation (34264) must hold 16 values");
        if (m[1] != 0.0 || m[4] != 0.0)
            throw FormatError("rotated transform in ModelTransformation (34264) is not supported");
        if (!(m[0] > 0.0) || !(m[5] < 0.0))
            throw FormatError("ModelTransformation (34264) is not north-up");
        scale_x = m[0];
        scale_y = -m[5];
        origin_x = m[3];
        origin_y = m[7];
        georeferenced = true;
    } else if (has(tiff_tag::model_pixel_scale) || has(tiff_tag::model_tiepoint)) {
        if (!has(tiff_tag::model_pixel_scale) || !has(tiff_tag::model_tiepoint))
            throw FormatError("ModelPixelScale (33550) and ModelTiepoint (33922) must appear together");
        const auto scale = entry_numbers(r, tags[tiff_tag::model_pixel_scale]);
        const auto tie = entry_numbers(r, tags[tiff_tag::model_tiepoint]);
        if (scale.size() < 2) throw FormatError("ModelPixelScale (33550) too short");
        if (tie.size() != 6) throw FormatError("ModelTiepoint (33922) must hold exactly one tiepoint");
        if (!(scale[0] > 0.0) || !(scale[1] > 0.0))
            throw FormatError("ModelPixelScale (33550) must be positive (flipped or rotated grids unsupported)");
        scale_x = scale[0];
        scale_y = scale[1];
        origin_x = tie[3] - tie[0] * scale_x;
        origin_y = tie[4] + tie[1] * scale_y;
        georeferenced = true;
    }

    const GeoKeys keys = parse_geokeys(r, tags);
    CrsTag crs = georeferenced ? crs_from_geokeys(keys) : CrsTag::unknown();
    if (auto it = keys.values.find(geokey::raster_type);
        georeferenced && it != keys.values.end() && it->second == geokey::raster_pixel_is_point) {
        origin_x -= scale_x / 2.0;
        origin_y += scale_y / 2.0;
    }

    std::optional<double> nodata;
    if (has(tiff_tag::gdal_nodata)) {
        const std::string s = entry_ascii(r, tags[tiff_tag::gdal_nodata]);
        auto v = parse_double(s);
        if (!v) throw FormatError("GDAL_NODATA (42113) value '" + s + "' is not numeric");
        nodata = *v;
    }

    // Block layout.
    const bool tiled = has(tiff_tag::tile_width) || has(tiff_tag::tile_offsets);
    std::size_t block_w = width, block_h = 0;
    std::vector<std::uint64_t> offsets, counts;
    if (tiled) {
        block_w = static_cast<std::size_t>(number(tiff_tag::tile_width));
        block_h = static_cast<std::size_t>(number(tiff_tag::tile_length));
        if (block_w == 0 || block_h == 0) throw FormatError("zero TileWidth/TileLength (322/323)");
        if (!has(tiff_tag::tile_offsets) || !has(tiff_tag::tile_byte_counts))
            throw FormatError("tiled image lacks TileOffsets/TileByteCounts (324/325)");
        offsets = entry_offsets(r, tags[tiff_tag::tile_offsets]);
        counts = entry_offsets(r, tags[tiff_tag::tile_byte_counts]);
    } else {
        block_h = static_cast<std::size_t>(number(tiff_tag::rows_per_strip, double(height)));
        block_h = std::clamp<std::size_t>(block_h, 1, height);
        if (!has(tiff_tag::strip_offsets) || !has(tiff_tag::strip_byte_counts))
            throw FormatError("striped image lacks StripOffsets/StripByteCounts (273/279)");
        offsets = entry_offsets(r, tags[tiff_tag::strip_offsets]);
        counts = entry_offsets(r, tags[tiff_tag::strip_byte_counts]);
    }
    const std::size_t across = (width + block_w - 1) / block_w;
    const std::size_t down = (height + block_h - 1) / block_h;
    if (offsets.size() != across * down || counts.size() != offsets.size())
        throw FormatError("expected " + std::to_string(across * down) + " " + (tiled ? "tiles" : "strips") +
                          ", found " + std::to_string(offsets.size()) + " offsets and " +
                          std::to_string(counts.size()) + " byte counts");

    std::vector<double> samples(width * height);
    for (std::size_t b = 0; b < offsets.size(); ++b) {
        const std::size_t bx = (b % across) * block_w;
        const std::size_t by = (b / across) * block_h;
        // Strips hold only the remaining rows; tiles are always full size.
        const std::size_t rows_here = tiled ? block_h : std::min(block_h, height - by);
        const std::size_t expected = block_w * rows_here * bps;
        const std::string what = std::string(tiled ? "tile " : "strip ") + std::to_string(b);
        r.need(offsets[b], counts[b], what);
        std::span<const std::uint8_t> raw = bytes.subspan(offsets[b], counts[b]);
        std::vector<std::uint8_t> inflated;
        if (compression == 8) {
            inflated = inflate_block(raw, expected, offsets[b]);
            raw = inflated;
        } else if (raw.size() < expected) {
            throw FormatError("truncated " + what + " at offset " + std::to_string(offsets[b]) + " (" +
                              std::to_string(raw.size()) + " of " + std::to_string(expected) + " bytes)");
        }
        const bool be = r.big_endian();
        auto decode = [&](std::size_t idx) -> double {
            const std::uint8_t* p = raw.data() + idx * bps;
            if (bps == 2) {
                const auto u = static_cast<std::uint16_t>(be ? (p[0] << 8 | p[1]) : (p[1] << 8 | p[0]));
                return sample_type == SampleType::int16 ? double(static_cast<std::int16_t>(u)) : double(u);
            }
            const std::uint32_t u = be ? (std::uint32_t(p[0]) << 24 | std::uint32_t(p[1]) << 16 |
                                          std::uint32_t(p[2]) << 8 | p[3])
                                       : (std::uint32_t(p[3]) << 24 | std::uint32_t(p[2]) << 16 |
                                          std::uint32_t(p[1]) << 8 | p[0]);
            return std::bit_cast<float>(u);
        };
        for (std::size_t rr = 0; rr < rows_here && by + rr < height; ++rr)
            for (std::size_t cc = 0; cc < block_w && bx + cc < width; ++cc)
                samples[(by + rr) * width + bx + cc] = decode(rr * block_w + cc);
    }

    // NaN float samples become nodata.
    if (sample_type == SampleType::float32) {
        bool any_nan = false;
        for (double v : samples) any_nan |= std::isnan(v);
        if (any_nan) {
            if (!nodata || std::isnan(*nodata)) nodata = kDefaultNodata;
            for (double& v : samples)
                if (std::isnan(v)) v = *nodata;
        }
        for (double v : samples)
            if (std::isinf(v) && !(nodata && v == *nodata))
                throw FormatError("infinite float sample without matching GDAL_NODATA (42113)");
    }
    if (nodata && !std::isfinite(*nodata)) throw FormatError("GDAL_NODATA (42113) must be finite");

    return RasterGrid(width, height, std::move(samples), GeoTransform(origin_x, origin_y, scale_x, scale_y), crs,
                      nodata, sample_type, BandKind::other());
}

enum class TiffLayout { strips, tiles };
enum class TiffCompression { none = 1, deflate = 8 };

struct GeoTiffWriteOptions {
    TiffLayout layout = TiffLayout::strips;
    std::size_t rows_per_strip = 0; // 0: whole image in one strip
    std::size_t tile_width = 256;
    std::size_t tile_length = 256;
    bool big_endian = false;
    std::optional<SampleType> sample_type; // default: the grid's own (float64 becomes float32)
    TiffCompression compression = TiffCompression::deflate;
};

// Encodes `grid` in the profile accepted by read_geotiff.
inline std::vector<std::uint8_t> write_geotiff(const RasterGrid& grid, const GeoTiffWriteOptions& opts = {}) {
    using detail::store_le_or_be;
    SampleType st = opts.sample_type.value_or(grid.sample_type());
    if (st == SampleType::float64) st = SampleType::float32;
    const bool be = opts.big_endian;
    const std::size_t width = grid.width(), height = grid.height();
    const std::size_t bps = st == SampleType::float32 ? 4 : 2;

    auto encode_sample = [&](std::vector<std::uint8_t>& out, double v) {
        switch (st) {
        case SampleType::int16: {
            const double c = std::round(v);
            if (c < -32768.0 || c > 32767.0) throw DomainError("sample out of int16 range");
            store_le_or_be(out, static_cast<std::int16_t>(c), be);
            break;
        }
        case SampleType::uint16: {
            const double c = std::round(v);
            if (c < 0.0 || c > 65535.0) throw DomainError("sample out of uint16 range");
            store_le_or_be(out, static_cast<std::uint16_t>(c), be);
            break;
        }
        default: store_le_or_be(out, static_cast<float>(v), be); break;
        }
    };

    const bool tiled = opts.layout == TiffLayout::tiles;
    const std::size_t block_w = tiled ? opts.tile_width : width;
    const std::size_t block_h =
        tiled ? opts.tile_length : (opts.rows_per_strip ? std::min(opts.rows_per_strip, height) : height);
    if (block_w == 0 || block_h == 0) throw DomainError("block dimensions must be positive");
    const std::size_t across = (width + block_w - 1) / block_w;
    const std::size_t down = (height + block_h - 1) / block_h;

    std::vector<std::vector<std::uint8_t>> blocks;
    for (std::size_t by = 0; by < down; ++by) {
        for (std::size_t bx = 0; bx < across; ++bx) {
            std::vector<std::uint8_t> raw;
            const std::size_t rows_here = tiled ? block_h : std::min(block_h, height - by * block_h);
            raw.reserve(block_w * rows_here * bps);
            const double pad = grid.nodata().value_or(0.0);
            for (std::size_t rr = 0; rr < rows_here; ++rr) {
                for (std::size_t cc = 0; cc < block_w; ++cc) {
                    const std::size_t col = bx * block_w + cc, row = by * block_h + rr;
                    encode_sample(raw, col < width && row < height ? grid(col, row) : pad);
                }
            }
            if (opts.compression == TiffCompression::deflate) {
                uLongf len = compressBound(static_cast<uLong>(raw.size()));
                std::vector<std::uint8_t> z(len);
                if (compress2(z.data(), &len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
                    throw Error("zlib compression failed");
                z.resize(len);
                raw = std::move(z);
            }
            blocks.push_back(std::move(raw));
        }
    }

    // Geokeys.
    std::vector<std::uint16_t> keys;
    std::vector<double> key_doubles;
    auto add_key = [&](std::uint16_t id, std::uint16_t value) {
        keys.insert(keys.end(), {id, 0, 1, value});
    };
    auto add_double_key = [&](std::uint16_t id, double value) {
        keys.insert(keys.end(), {id, tiff_tag::geo_double_params, 1, static_cast<std::uint16_t>(key_doubles.size())});
        key_doubles.push_back(value);
    };
    switch (grid.crs().kind) {
    case CrsKind::sinusoidal_sphere: {
        const double radius = grid.crs().sphere_radius.value_or(kModisSphereRadius);
        add_key(geokey::model_type, geokey::model_projected);
        add_key(geokey::raster_type, 1);
        add_key(geokey::geographic_type, geokey::user_defined);
        add_double_key(geokey::semi_major_axis, radius);
        add_double_key(geokey::semi_minor_axis, radius);
        add_key(geokey::projected_cs_type, geokey::user_defined);
        add_key(geokey::projection, geokey::user_defined);
        add_key(geokey::coord_trans, geokey::ct_sinusoidal);
        add_key(geokey::linear_units, geokey::linear_meter);
        break;
    }
    case CrsKind::projected_meters:
        add_key(geokey::model_type, geokey::model_projected);
        add_key(geokey::raster_type, 1);
        add_key(geokey::projected_cs_type, geokey::user_defined);
        add_key(geokey::linear_units, geokey::linear_meter);
        break;
    case CrsKind::geographic_degrees:
        add_key(geokey::model_type, geokey::model_geographic);
        add_key(geokey::raster_type, 1);
        add_key(geokey::geographic_type, 4326);
        break;
    case CrsKind::unknown: break;
    }
    std::vector<std::uint16_t> key_dir;
    if (!keys.empty()) {
        key_dir = {1, 1, 0, static_cast<std::uint16_t>(keys.size() / 4)};
        key_dir.insert(key_dir.end(), keys.begin(), keys.end());
    }

    struct Entry {
        std::uint16_t tag, type;
        std::uint32_t count;
        std::vector<std::uint8_t> payload; // already in file byte order
    };
    std::vector<Entry> entries;
    auto shorts = [&](std::uint16_t tag, std::vector<std::uint16_t> v) {
        Entry e{tag, 3, static_cast<std::uint32_t>(v.size()), {}};
        for (auto x : v) store_le_or_be(e.payload, x, be);
        entries.push_back(std::move(e));
    };
    auto longs = [&](std::uint16_t tag, const std::vector<std::uint32_t>& v) {
        Entry e{tag, 4, static_cast<std::uint32_t>(v.size()), {}};
        for (auto x : v) store_le_or_be(e.payload, x, be);
        entries.push_back(std::move(e));
    };
    auto doubles = [&](std::uint16_t tag, const std::vector<double>& v) {
        Entry e{tag, 12, static_cast<std::uint32_t>(v.size()), {}};
        for (auto x : v) store_le_or_be(e.payload, x, be);
        entries.push_back(std::move(e));
    };

    const auto& gt = grid.transform();
    const auto sample_format = static_cast<std::uint16_t>(st == SampleType::float32 ? 3 : st == SampleType::int16 ? 2 : 1);
    longs(tiff_tag::image_width, {static_cast<std::uint32_t>(width)});
    longs(tiff_tag::image_length, {static_cast<std::uint32_t>(height)});
    shorts(tiff_tag::bits_per_sample, {static_cast<std::uint16_t>(bps * 8)});
    shorts(tiff_tag::compression, {static_cast<std::uint16_t>(opts.compression)});
    shorts(tiff_tag::photometric, {1});
    // Offsets are patched once the layout is known; placeholders keep order.
    std::vector<std::uint32_t> placeholder(blocks.size(), 0), byte_counts;
    for (const auto& b : blocks) byte_counts.push_back(static_cast<std::uint32_t>(b.size()));
    if (!tiled) longs(tiff_tag::strip_offsets, placeholder);
    shorts(tiff_tag::samples_per_pixel, {1});
    if (!tiled) {
        longs(tiff_tag::rows_per_strip, {static_cast<std::uint32_t>(block_h)});
        longs(tiff_tag::strip_byte_counts, byte_counts);
    }
    shorts(tiff_tag::planar_config, {1});
    if (tiled) {
        longs(tiff_tag::tile_width, {static_cast<std::uint32_t>(block_w)});
        longs(tiff_tag::tile_length, {static_cast<std::uint32_t>(block_h)});
        longs(tiff_tag::tile_offsets, placeholder);
        longs(tiff_tag::tile_byte_counts, byte_counts);
    }
    shorts(tiff_tag::sample_format, {sample_format});
    doubles(tiff_tag::model_pixel_scale, {gt.pixel_width(), gt.pixel_height(), 0.0});
    doubles(tiff_tag::model_tiepoint, {0.0, 0.0, 0.0, gt.origin_x(), gt.origin_y(), 0.0});
    if (!key_dir.empty()) shorts(tiff_tag::geo_key_directory, key_dir);
    if (!key_doubles.empty()) doubles(tiff_tag::geo_double_params, key_doubles);
    if (grid.nodata()) {
        Entry e{tiff_tag::gdal_nodata, 2, 0, {}};
        const std::string s = detail::format_g17(*grid.nodata());
        e.payload.assign(s.begin(), s.end());
        e.payload.push_back(0);
        e.count = static_cast<std::uint32_t>(e.payload.size());
        entries.push_back(std::move(e));
    }

    // Layout: header | IFD | out-of-line tag data | blocks.
    const std::size_t ifd_offset = 8;
    const std::size_t ifd_size = 2 + entries.size() * 12 + 4;
    std::size_t cursor = ifd_offset + ifd_size;
    std::vector<std::size_t> data_offsets(entries.size(), 0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].payload.size() > 4) {
            cursor += cursor & 1;
            data_offsets[i] = cursor;
            cursor += entries[i].payload.size();
        }
    }
    std::vector<std::uint32_t> block_offsets;
    for (const auto& b : blocks) {
        cursor += cursor & 1;
        block_offsets.push_back(static_cast<std::uint32_t>(cursor));
        cursor += b.size();
    }
    for (auto& e : entries) {
        if (e.tag == tiff_tag::strip_offsets || e.tag == tiff_tag::tile_offsets) {
            e.payload.clear();
            for (auto x : block_offsets) store_le_or_be(e.payload, x, be);
        }
    }

    std::vector<std::uint8_t> out;
    out.reserve(cursor);
    out.push_back(be ? 'M' : 'I');
    out.push_back(be ? 'M' : 'I');
    store_le_or_be(out, std::uint16_t{42}, be);
    store_le_or_be(out, static_cast<std::uint32_t>(ifd_offset), be);
    store_le_or_be(out, static_cast<std::uint16_t>(entries.size()), be);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        store_le_or_be(out, e.tag, be);
        store_le_or_be(out, e.type, be);
        store_le_or_be(out, e.count, be);
        if (e.payload.size() <= 4) {
            out.insert(out.end(), e.payload.begin(), e.payload.end());
            out.insert(out.end(), 4 - e.payload.size(), 0);
        } else {
            store_le_or_be(out, static_cast<std::uint32_t>(data_offsets[i]), be);
        }
    }
    store_le_or_be(out, std::uint32_t{0}, be);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].payload.size() <= 4) continue;
        out.resize(data_offsets[i], 0);
        out.insert(out.end(), entries[i].payload.begin(), entries[i].payload.end());
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        out.resize(block_offsets[b], 0);
        out.insert(out.end(), blocks[b].begin(), blocks[b].end());
    }
    return out;
}

} // namespace greenzonal
