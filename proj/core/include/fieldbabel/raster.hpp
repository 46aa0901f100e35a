#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fieldbabel/geometry.hpp"

namespace fieldbabel {

/// Default pitch of analysis-ready rasters, in map units (metres).
inline constexpr double kAnalysisPixelSize = 10.0;

/// Sentinel stored in nodata cells; compared by exact equality.
inline constexpr float kNodata = -9999.0f;

/// North-up affine grid. The origin is the outer top-left corner of pixel
/// (0,0); rows advance southward, so pixel sizes are both stored positive.
struct GridGeometry {
    int width = 0;
    int height = 0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    double pixel_size_x = kAnalysisPixelSize;
    double pixel_size_y = kAnalysisPixelSize;
    int crs = 0;  // EPSG code

    std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }

    Point pixel_center(int col, int row) const {
        return {origin_x + (col + 0.5) * pixel_size_x, origin_y - (row + 0.5) * pixel_size_y};
    }
    /// Fractional pixel coordinates; (0,0) is the top-left corner of the grid.
    double col_of(double x) const { return (x - origin_x) / pixel_size_x; }
    double row_of(double y) const { return (origin_y - y) / pixel_size_y; }

    BBox extent() const {
        return {origin_x, origin_y - height * pixel_size_y, origin_x + width * pixel_size_x, origin_y};
    }

    /// Throws Error(invalid_argument) unless dimensions and pixel sizes are positive.
    void validate() const;

    friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Single-band 32-bit float raster, row-major.
struct Raster {
    GridGeometry geometry;
    std::vector<float> values;
    float nodata = kNodata;

    Raster() = default;
    Raster(GridGeometry g, float fill = kNodata, float nodata_value = kNodata)
        : geometry(g), values(g.size(), fill), nodata(nodata_value) {}

    float& at(int col, int row) { return values[index(col, row)]; }
    float at(int col, int row) const { return values[index(col, row)]; }
    bool is_nodata(float v) const { return v == nodata; }
    bool is_nodata(int col, int row) const { return at(col, row) == nodata; }

    std::size_t index(int col, int row) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(geometry.width) + static_cast<std::size_t>(col);
    }

    /// Bitwise comparison of samples, plus geometry and nodata.
    friend bool operator==(const Raster& a, const Raster& b);
};

/// Bands sharing one grid, e.g. the RGB composite written to bundles.
struct MultiBandRaster {
    GridGeometry geometry;
    std::vector<std::vector<float>> bands;
    float nodata = kNodata;

    std::size_t band_count() const { return bands.size(); }
    Raster band(std::size_t i) const;

    friend bool operator==(const MultiBandRaster& a, const MultiBandRaster& b);
};

/// Per-pixel selection over a grid (one byte per pixel, 0 or 1).
struct Mask {
    GridGeometry geometry;
    std::vector<std::uint8_t> bits;

    Mask() = default;
    explicit Mask(GridGeometry g, bool fill = false) : geometry(g), bits(g.size(), fill ? 1 : 0) {}

    bool test(int col, int row) const { return bits[index(col, row)] != 0; }
    void set(int col, int row, bool v = true) { bits[index(col, row)] = v ? 1 : 0; }
    std::size_t count() const;

    std::size_t index(int col, int row) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(geometry.width) + static_cast<std::size_t>(col);
    }

    friend bool operator==(const Mask&, const Mask&) = default;
};

}  // namespace fieldbabel
