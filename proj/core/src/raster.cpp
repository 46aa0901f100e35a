#include "fieldbabel/raster.hpp"

#include <algorithm>
#include <cstring>

#include <fmt/format.h>

#include "fieldbabel/error.hpp"

namespace fieldbabel {

void GridGeometry::validate() const {
    if (width <= 0 || height <= 0) {
        throw Error(ErrorCode::invalid_argument, fmt::format("grid dimensions {}x{} must be positive", width, height));
    }
    if (!(pixel_size_x > 0.0) || !(pixel_size_y > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "pixel sizes must be strictly positive");
    }
}

namespace {

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

bool same_bits(float a, float b) { return std::memcmp(&a, &b, sizeof(float)) == 0; }

}  // namespace

bool operator==(const Raster& a, const Raster& b) {
    return a.geometry == b.geometry && same_bits(a.nodata, b.nodata) && same_bits(a.values, b.values);
}

Raster MultiBandRaster::band(std::size_t i) const {
    Raster r;
    r.geometry = geometry;
    r.values = bands.at(i);
    r.nodata = nodata;
    return r;
}

bool operator==(const MultiBandRaster& a, const MultiBandRaster& b) {
    if (!(a.geometry == b.geometry) || !same_bits(a.nodata, b.nodata) || a.bands.size() != b.bands.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.bands.size(); ++i) {
        if (!same_bits(a.bands[i], b.bands[i])) return false;
    }
    return true;
}

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

}  // namespace fieldbabel
