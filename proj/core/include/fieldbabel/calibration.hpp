#pragma once

#include <vector>

#include "fieldbabel/raster.hpp"

namespace fieldbabel {

struct CalibrationVector {
    int line = 0;
    std::vector<int> pixels;
    std::vector<double> gains;  // σ⁰ gain A at each pixel
};

/// Sparse σ⁰ gain table, one vector per calibrated line. All vectors share
/// the same pixel positions.
struct CalibrationLUT {
    std::vector<CalibrationVector> vectors;

    bool empty() const { return vectors.empty(); }

    /// Throws Error(empty_lut) when empty, Error(invalid_argument) when the
    /// ordering or positivity rules are violated.
    void validate() const;
};

/// A single-vector, single-pixel table: gain A everywhere.
CalibrationLUT constant_lut(double gain);

/// Bilinear in (line, pixel); clamped to the nearest vector/point outside the
/// table's hull.
double interpolate_gain(const CalibrationLUT& lut, double col, double row);

/// Scalar forms of the radiometric conversions, evaluated in double.
inline double sigma0_from_dn(double dn, double gain) { return (dn * dn) / (gain * gain); }
double linear_to_db(double v);
double db_to_linear(double db);

/// σ⁰ = DN² / A², evaluated in double and stored as float. Nodata propagates.
Raster calibrate_sigma0(const Raster& dn, const CalibrationLUT& lut);

/// 10·log10(v) for v > 0, nodata otherwise.
Raster to_db(const Raster& linear);

/// 10^(v/10) on non-nodata cells.
Raster from_db(const Raster& db);

}  // namespace fieldbabel
