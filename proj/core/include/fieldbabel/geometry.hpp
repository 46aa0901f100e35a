#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace fieldbabel {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

/// Closed ring: first vertex repeated as last.
using Ring = std::vector<Point>;

/// Polygon with optional holes. Coordinates are (lon, lat) for WGS84
/// geometries and (easting, northing) once projected onto an analysis grid.
struct Polygon {
    Ring exterior;
    std::vector<Ring> holes;

    friend bool operator==(const Polygon&, const Polygon&) = default;
};

/// Axis-aligned rectangle, closed on all sides.
struct BBox {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
    bool empty() const { return !(min_x <= max_x && min_y <= max_y); }

    bool intersects(const BBox& o) const {
        return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
    }
    bool contains(Point p) const {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }

    friend bool operator==(const BBox&, const BBox&) = default;
};

std::optional<BBox> intersection(const BBox& a, const BBox& b);

BBox bbox_of(const Ring& ring);
BBox bbox_of(const Polygon& polygon);

/// Twice the signed area; positive for counter-clockwise rings.
double signed_area2(const Ring& ring);

/// x where edge (a,b) crosses the horizontal line at y. Endpoints are put in
/// a canonical order first so the result does not depend on ring direction.
inline double edge_crossing_x(Point a, Point b, double y) {
    if (b.y < a.y || (b.y == a.y && b.x < a.x)) std::swap(a, b);
    return a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
}

/// Even-odd crossing test against a single ring.
bool ring_contains(const Ring& ring, Point p);

/// Even-odd rule over the exterior and all holes.
bool polygon_contains(const Polygon& polygon, Point p);

/// Throws Error(invalid_polygon / unclosed_ring) when ring rules are broken:
/// closed, at least four vertices, no repeated consecutive vertex, and every
/// hole vertex inside the exterior.
void validate_polygon(const Polygon& polygon);

/// Exterior counter-clockwise, holes clockwise.
Polygon with_rfc7946_orientation(Polygon polygon);

}  // namespace fieldbabel
