#include "fieldbabel/calibration.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fieldbabel/error.hpp"

namespace fieldbabel {

void CalibrationLUT::validate() const {
    if (vectors.empty()) throw Error(ErrorCode::empty_lut, "calibration LUT has no vectors");
    const auto& pixels = vectors.front().pixels;
    if (pixels.empty()) throw Error(ErrorCode::empty_lut, "calibration vector has no points");
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const auto& v = vectors[i];
        if (i > 0 && v.line <= vectors[i - 1].line) {
            throw Error(ErrorCode::invalid_argument, "calibration lines must be strictly increasing");
        }
        if (v.pixels != pixels) {
            throw Error(ErrorCode::invalid_argument,
                        fmt::format("calibration vector at line {} uses different pixel positions", v.line));
        }
        if (v.gains.size() != v.pixels.size()) {
            throw Error(ErrorCode::invalid_argument, "calibration vector gain/pixel count mismatch");
        }
        for (std::size_t p = 0; p < v.pixels.size(); ++p) {
            if (p > 0 && v.pixels[p] <= v.pixels[p - 1]) {
                throw Error(ErrorCode::invalid_argument, "calibration pixels must be strictly increasing");
            }
            if (!(v.gains[p] > 0.0)) throw Error(ErrorCode::invalid_argument, "calibration gains must be positive");
        }
    }
}

CalibrationLUT constant_lut(double gain) {
    return CalibrationLUT{{CalibrationVector{0, {0}, {gain}}}};
}

namespace {

// Index i and weight t such that the query lies between knots i and i+1 with
// fraction t, clamped at both ends.
template <typename Knot>
std::pair<std::size_t, double> bracket(const std::vector<Knot>& knots, double q) {
    if (knots.size() == 1 || q <= knots.front()) return {0, 0.0};
    if (q >= knots.back()) return {knots.size() - 2, 1.0};
    const auto it = std::upper_bound(knots.begin(), knots.end(), q);
    const auto i = static_cast<std::size_t>(it - knots.begin()) - 1;
    return {i, (q - knots[i]) / static_cast<double>(knots[i + 1] - knots[i])};
}

double along_pixels(const CalibrationVector& v, std::size_t i, double t) {
    if (v.gains.size() == 1) return v.gains[0];
    return v.gains[i] + t * (v.gains[i + 1] - v.gains[i]);
}

}  // namespace

double interpolate_gain(const CalibrationLUT& lut, double col, double row) {
    if (lut.empty() || lut.vectors.front().pixels.empty()) {
        throw Error(ErrorCode::empty_lut, "calibration LUT has no vectors");
    }
    std::vector<int> lines;
    lines.reserve(lut.vectors.size());
    for (const auto& v : lut.vectors) lines.push_back(v.line);
    const auto [pi, pt] = bracket(lut.vectors.front().pixels, col);
    const auto [li, lt] = bracket(lines, row);
    const double g0 = along_pixels(lut.vectors[li], pi, pt);
    if (lut.vectors.size() == 1) return g0;
    const double g1 = along_pixels(lut.vectors[li + 1], pi, pt);
    return g0 + lt * (g1 - g0);
}

Raster calibrate_sigma0(const Raster& dn, const CalibrationLUT& lut) {
    lut.validate();
    const auto& g = dn.geometry;
    Raster out(g, dn.nodata, dn.nodata);

    std::vector<int> lines;
    for (const auto& v : lut.vectors) lines.push_back(v.line);
    const auto& pixels = lut.vectors.front().pixels;

    // Gains along pixels are separable per line, so precompute each vector
    // expanded over the columns once.
    std::vector<std::vector<double>> expanded(lut.vectors.size(), std::vector<double>(g.width));
    for (std::size_t vi = 0; vi < lut.vectors.size(); ++vi) {
        for (int c = 0; c < g.width; ++c) {
            const auto [pi, pt] = bracket(pixels, static_cast<double>(c));
            expanded[vi][c] = along_pixels(lut.vectors[vi], pi, pt);
        }
    }

    for (int r = 0; r < g.height; ++r) {
        const auto [li, lt] = bracket(lines, static_cast<double>(r));
        for (int c = 0; c < g.width; ++c) {
            const float v = dn.at(c, r);
            if (dn.is_nodata(v)) continue;
            if (v < 0.0f) {
                throw Error(ErrorCode::negative_input, fmt::format("negative digital number {} at ({}, {})", v, c, r));
            }
            const double g0 = expanded[li][c];
            const double a = lut.vectors.size() == 1 ? g0 : g0 + lt * (expanded[li + 1][c] - g0);
            out.at(c, r) = static_cast<float>(sigma0_from_dn(v, a));
        }
    }
    return out;
}

double linear_to_db(double v) { return 10.0 * std::log10(v); }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

Raster to_db(const Raster& linear) {
    Raster out = linear;
    for (auto& v : out.values) {
        if (linear.is_nodata(v)) continue;
        v = v > 0.0f ? static_cast<float>(linear_to_db(v)) : linear.nodata;
    }
    return out;
}

Raster from_db(const Raster& db) {
    Raster out = db;
    for (auto& v : out.values) {
        if (db.is_nodata(v)) continue;
        v = static_cast<float>(db_to_linear(v));
    }
    return out;
}

}  // namespace fieldbabel
