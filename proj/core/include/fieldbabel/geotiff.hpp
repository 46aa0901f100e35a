#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fieldbabel/raster.hpp"

namespace fieldbabel {

/// Sample encodings accepted by the GeoTIFF subset.
enum class SampleType {
    float32,  // BitsPerSample=32, SampleFormat=3
    uint16,   // BitsPerSample=16, SampleFormat=1 (digital numbers)
};

/*
 * GeoTIFF subset: little-endian, uncompressed, stripped, chunky samples,
 * PhotometricInterpretation=1, one or three samples per pixel. Georeferencing
 * comes from ModelPixelScale + ModelTiepoint and a GeoKeyDirectory carrying
 * the EPSG code. Anything outside the subset is rejected with a distinct
 * ErrorCode:
 *   io_error               unreadable or truncated file
 *   multi_band             more than one sample per pixel (single-band reader)
 *   missing_georeferencing pixel scale, tiepoint or geokeys absent
 *   unsupported_format     everything else outside the subset
 */
std::vector<std::uint8_t> encode_geotiff(const MultiBandRaster& raster, SampleType type = SampleType::float32);
MultiBandRaster decode_geotiff(std::span<const std::uint8_t> bytes);

Raster read_geotiff(const std::filesystem::path& path);
MultiBandRaster read_geotiff_bands(const std::filesystem::path& path);

void write_geotiff(const Raster& raster, const std::filesystem::path& path, SampleType type = SampleType::float32);
void write_geotiff(const MultiBandRaster& raster, const std::filesystem::path& path);

MultiBandRaster as_multiband(const Raster& raster);

}  // namespace fieldbabel
