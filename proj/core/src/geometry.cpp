#include "fieldbabel/geometry.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "fieldbabel/error.hpp"

namespace fieldbabel {

std::optional<BBox> intersection(const BBox& a, const BBox& b) {
    if (!a.intersects(b)) return std::nullopt;
    return BBox{std::max(a.min_x, b.min_x), std::max(a.min_y, b.min_y),
                std::min(a.max_x, b.max_x), std::min(a.max_y, b.max_y)};
}

BBox bbox_of(const Ring& ring) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    BBox box{inf, inf, -inf, -inf};
    for (const auto& p : ring) {
        box.min_x = std::min(box.min_x, p.x);
        box.min_y = std::min(box.min_y, p.y);
        box.max_x = std::max(box.max_x, p.x);
        box.max_y = std::max(box.max_y, p.y);
    }
    return box;
}

BBox bbox_of(const Polygon& polygon) { return bbox_of(polygon.exterior); }

double signed_area2(const Ring& ring) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        acc += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
    }
    return acc;
}

bool ring_contains(const Ring& ring, Point p) {
    bool inside = false;
    const std::size_t n = ring.size();
    if (n < 2) return false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        if ((ring[i].y > p.y) != (ring[j].y > p.y)) {
            if (p.x < edge_crossing_x(ring[i], ring[j], p.y)) inside = !inside;
        }
    }
    return inside;
}

bool polygon_contains(const Polygon& polygon, Point p) {
    bool inside = ring_contains(polygon.exterior, p);
    for (const auto& hole : polygon.holes) {
        if (ring_contains(hole, p)) inside = !inside;
    }
    return inside;
}

namespace {

void validate_ring(const Ring& ring, const char* what) {
    if (ring.size() < 4) {
        throw Error(ErrorCode::invalid_polygon,
                    fmt::format("{} ring has {} vertices, at least 4 required", what, ring.size()));
    }
    if (!(ring.front() == ring.back())) {
        throw Error(ErrorCode::unclosed_ring, fmt::format("{} ring is not closed", what));
    }
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        if (ring[i] == ring[i + 1]) {
            throw Error(ErrorCode::invalid_polygon,
                        fmt::format("{} ring repeats vertex {} consecutively", what, i));
        }
    }
}

}  // namespace

void validate_polygon(const Polygon& polygon) {
    validate_ring(polygon.exterior, "exterior");
    for (const auto& hole : polygon.holes) {
        validate_ring(hole, "hole");
        for (const auto& v : hole) {
            if (!ring_contains(polygon.exterior, v)) {
                throw Error(ErrorCode::invalid_polygon, "hole vertex lies outside the exterior ring");
            }
        }
    }
}

Polygon with_rfc7946_orientation(Polygon polygon) {
    if (signed_area2(polygon.exterior) < 0) std::reverse(polygon.exterior.begin(), polygon.exterior.end());
    for (auto& hole : polygon.holes) {
        if (signed_area2(hole) > 0) std::reverse(hole.begin(), hole.end());
    }
    return polygon;
}

}  // namespace fieldbabel
