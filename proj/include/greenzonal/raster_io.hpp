#pragma once

#include <filesystem>
#include <string>

#include "greenzonal/ascii_grid.hpp"
#include "greenzonal/file_io.hpp"
#include "greenzonal/geotiff.hpp"
#include "greenzonal/raster.hpp"

namespace greenzonal {

enum class RasterFormat { automatic, ascii, gtiff };

inline RasterFormat raster_format_from_string(const std::string& s) {
    if (s == "auto") return RasterFormat::automatic;
    if (s == "ascii") return RasterFormat::ascii;
    if (s == "gtiff") return RasterFormat::gtiff;
    throw DomainError("unknown raster format '" + s + "'");
}

inline bool looks_like_tiff(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 4 &&
           ((bytes[0] == 'I' && bytes[1] == 'I' && bytes[2] == 42 && bytes[3] == 0) ||
            (bytes[0] == 'M' && bytes[1] == 'M' && bytes[2] == 0 && bytes[3] == 42) ||
            (bytes[0] == 'I' && bytes[1] == 'I' && bytes[2] == 43) || (bytes[0] == 'M' && bytes[1] == 'M' && bytes[3] == 43));
}

inline RasterGrid read_raster_file(const std::filesystem::path& path, RasterFormat format = RasterFormat::automatic) {
    const auto bytes = read_file_bytes(path);
    if (format == RasterFormat::automatic) format = looks_like_tiff(bytes) ? RasterFormat::gtiff : RasterFormat::ascii;
    try {
        if (format == RasterFormat::gtiff) return read_geotiff(bytes);
        return read_ascii_grid(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

// Writes GeoTIFF for .tif/.tiff paths, ASCII grid otherwise.
inline void write_raster_file(const std::filesystem::path& path, const RasterGrid& grid) {
    const auto ext = detail::lower(path.extension().string());
    if (ext == ".tif" || ext == ".tiff") {
        GeoTiffWriteOptions opts;
        if (grid.sample_type() == SampleType::float64) opts.sample_type = SampleType::float32;
        write_file_atomic(path, write_geotiff(grid, opts));
    } else {
        write_file_atomic(path, write_ascii_grid(grid));
    }
}

} // namespace greenzonal
