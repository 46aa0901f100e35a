#include "fieldbabel/crs.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "fieldbabel/error.hpp"

namespace fieldbabel {

namespace {

struct UtmZone {
    int zone = 0;
    bool south = false;
};

bool utm_zone_of(int epsg, UtmZone& out) {
    if (epsg >= 32601 && epsg <= 32660) {
        out = {epsg - 32600, false};
        return true;
    }
    if (epsg >= 32701 && epsg <= 32760) {
        out = {epsg - 32700, true};
        return true;
    }
    if (epsg >= 25828 && epsg <= 25838) {
        out = {epsg - 25800, false};
        return true;
    }
    return false;
}

UtmZone require_zone(int epsg) {
    UtmZone z;
    if (!utm_zone_of(epsg, z)) throw Error(ErrorCode::crs_mismatch, fmt::format("unsupported CRS EPSG:{}", epsg));
    return z;
}

// WGS84 ellipsoid and UTM constants.
constexpr double kA = 6378137.0;
constexpr double kF = 1.0 / 298.257223563;
constexpr double kK0 = 0.9996;
constexpr double kFalseEasting = 500000.0;
constexpr double kFalseNorthingSouth = 10000000.0;

struct KruegerSeries {
    double n, big_a, two_sqrt_n_over;
    double alpha[3], beta[3], delta[3];

    KruegerSeries() {
        n = kF / (2.0 - kF);
        const double n2 = n * n, n3 = n2 * n;
        big_a = kA / (1.0 + n) * (1.0 + n2 / 4.0 + n2 * n2 / 64.0);
        two_sqrt_n_over = 2.0 * std::sqrt(n) / (1.0 + n);
        alpha[0] = n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0;
        alpha[1] = 13.0 * n2 / 48.0 - 3.0 * n3 / 5.0;
        alpha[2] = 61.0 * n3 / 240.0;
        beta[0] = n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0;
        beta[1] = n2 / 48.0 + n3 / 15.0;
        beta[2] = 17.0 * n3 / 480.0;
        delta[0] = 2.0 * n - 2.0 * n2 / 3.0 - 2.0 * n3;
        delta[1] = 7.0 * n2 / 3.0 - 8.0 * n3 / 5.0;
        delta[2] = 56.0 * n3 / 15.0;
    }
};

const KruegerSeries& series() {
    static const KruegerSeries s;
    return s;
}

double central_meridian(int zone) { return ((zone - 1) * 6 - 180 + 3) * std::numbers::pi / 180.0; }

}  // namespace

bool is_geographic_crs(int epsg) { return epsg >= 4000 && epsg < 5000; }

bool is_supported_crs(int epsg) {
    UtmZone z;
    return epsg == 4326 || utm_zone_of(epsg, z);
}

Point project_point(Point lonlat, int epsg) {
    if (epsg == 4326) return lonlat;
    const auto z = require_zone(epsg);
    const auto& s = series();
    const double phi = lonlat.y * std::numbers::pi / 180.0;
    const double dlam = lonlat.x * std::numbers::pi / 180.0 - central_meridian(z.zone);

    const double sin_phi = std::sin(phi);
    const double t = std::sinh(std::atanh(sin_phi) - s.two_sqrt_n_over * std::atanh(s.two_sqrt_n_over * sin_phi));
    const double xi_p = std::atan2(t, std::cos(dlam));
    const double eta_p = std::atanh(std::sin(dlam) / std::sqrt(1.0 + t * t));

    double xi = xi_p, eta = eta_p;
    for (int j = 1; j <= 3; ++j) {
        xi += s.alpha[j - 1] * std::sin(2 * j * xi_p) * std::cosh(2 * j * eta_p);
        eta += s.alpha[j - 1] * std::cos(2 * j * xi_p) * std::sinh(2 * j * eta_p);
    }
    return {kFalseEasting + kK0 * s.big_a * eta, (z.south ? kFalseNorthingSouth : 0.0) + kK0 * s.big_a * xi};
}

Point unproject_point(Point xy, int epsg) {
    if (epsg == 4326) return xy;
    const auto z = require_zone(epsg);
    const auto& s = series();
    const double xi = (xy.y - (z.south ? kFalseNorthingSouth : 0.0)) / (kK0 * s.big_a);
    const double eta = (xy.x - kFalseEasting) / (kK0 * s.big_a);

    double xi_p = xi, eta_p = eta;
    for (int j = 1; j <= 3; ++j) {
        xi_p -= s.beta[j - 1] * std::sin(2 * j * xi) * std::cosh(2 * j * eta);
        eta_p -= s.beta[j - 1] * std::cos(2 * j * xi) * std::sinh(2 * j * eta);
    }
    const double chi = std::asin(std::sin(xi_p) / std::cosh(eta_p));
    double phi = chi;
    for (int j = 1; j <= 3; ++j) phi += s.delta[j - 1] * std::sin(2 * j * chi);
    const double lam = central_meridian(z.zone) + std::atan2(std::sinh(eta_p), std::cos(xi_p));
    return {lam * 180.0 / std::numbers::pi, phi * 180.0 / std::numbers::pi};
}

Polygon project_polygon(const Polygon& lonlat, int epsg) {
    auto ring = [epsg](const Ring& r) {
        Ring out;
        out.reserve(r.size());
        for (const auto& p : r) out.push_back(project_point(p, epsg));
        return out;
    };
    Polygon out;
    out.exterior = ring(lonlat.exterior);
    for (const auto& h : lonlat.holes) out.holes.push_back(ring(h));
    return out;
}

namespace {

template <typename Map>
BBox map_bbox(const BBox& box, Map map) {
    constexpr int kSteps = 16;
    Ring pts;
    for (int i = 0; i <= kSteps; ++i) {
        const double fx = box.min_x + (box.max_x - box.min_x) * i / kSteps;
        const double fy = box.min_y + (box.max_y - box.min_y) * i / kSteps;
        pts.push_back(map(Point{fx, box.min_y}));
        pts.push_back(map(Point{fx, box.max_y}));
        pts.push_back(map(Point{box.min_x, fy}));
        pts.push_back(map(Point{box.max_x, fy}));
    }
    return bbox_of(pts);
}

}  // namespace

BBox project_bbox(const BBox& lonlat, int epsg) {
    if (epsg == 4326) return lonlat;
    return map_bbox(lonlat, [epsg](Point p) { return project_point(p, epsg); });
}

BBox unproject_bbox(const BBox& xy, int epsg) {
    if (epsg == 4326) return xy;
    return map_bbox(xy, [epsg](Point p) { return unproject_point(p, epsg); });
}

}  // namespace fieldbabel
