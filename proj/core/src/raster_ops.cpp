#include "fieldbabel/raster_ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "fieldbabel/error.hpp"

namespace fieldbabel {

namespace {

// Snap values that are within rounding noise of an integer pixel boundary.
double snap(double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
}

struct PixelWindow {
    int col0, row0, col1, row1;  // half-open
};

PixelWindow covering_window(const GridGeometry& g, const BBox& bbox) {
    const auto overlap = intersection(g.extent(), bbox);
    if (!overlap) throw Error(ErrorCode::empty_intersection, "bbox does not intersect the raster extent");
    PixelWindow w{
        static_cast<int>(std::floor(snap(g.col_of(overlap->min_x)))),
        static_cast<int>(std::floor(snap(g.row_of(overlap->max_y)))),
        static_cast<int>(std::ceil(snap(g.col_of(overlap->max_x)))),
        static_cast<int>(std::ceil(snap(g.row_of(overlap->min_y)))),
    };
    w.col0 = std::clamp(w.col0, 0, g.width);
    w.col1 = std::clamp(w.col1, 0, g.width);
    w.row0 = std::clamp(w.row0, 0, g.height);
    w.row1 = std::clamp(w.row1, 0, g.height);
    if (w.col1 <= w.col0 || w.row1 <= w.row0) {
        throw Error(ErrorCode::empty_intersection, "bbox touches the raster extent without covering any pixel");
    }
    return w;
}

GridGeometry sub_geometry(const GridGeometry& g, const PixelWindow& w) {
    GridGeometry out = g;
    out.width = w.col1 - w.col0;
    out.height = w.row1 - w.row0;
    out.origin_x = g.origin_x + w.col0 * g.pixel_size_x;
    out.origin_y = g.origin_y - w.row0 * g.pixel_size_y;
    return out;
}

std::vector<float> copy_window(const std::vector<float>& src, const GridGeometry& g, const PixelWindow& w) {
    std::vector<float> out;
    out.reserve(static_cast<std::size_t>(w.col1 - w.col0) * static_cast<std::size_t>(w.row1 - w.row0));
    for (int r = w.row0; r < w.row1; ++r) {
        const auto begin = src.begin() + static_cast<std::ptrdiff_t>(r) * g.width;
        out.insert(out.end(), begin + w.col0, begin + w.col1);
    }
    return out;
}

}  // namespace

Raster subset_bbox(const Raster& raster, const BBox& bbox) {
    const auto w = covering_window(raster.geometry, bbox);
    Raster out;
    out.geometry = sub_geometry(raster.geometry, w);
    out.nodata = raster.nodata;
    out.values = copy_window(raster.values, raster.geometry, w);
    return out;
}

MultiBandRaster subset_bbox(const MultiBandRaster& raster, const BBox& bbox) {
    const auto w = covering_window(raster.geometry, bbox);
    MultiBandRaster out;
    out.geometry = sub_geometry(raster.geometry, w);
    out.nodata = raster.nodata;
    for (const auto& b : raster.bands) out.bands.push_back(copy_window(b, raster.geometry, w));
    return out;
}

Raster resample_bilinear(const Raster& raster, const GridGeometry& target) {
    const auto& src = raster.geometry;
    if (src.crs != target.crs) {
        throw Error(ErrorCode::crs_mismatch, fmt::format("source EPSG:{} vs target EPSG:{}", src.crs, target.crs));
    }
    target.validate();
    Raster out(target, raster.nodata, raster.nodata);
    for (int row = 0; row < target.height; ++row) {
        for (int col = 0; col < target.width; ++col) {
            const Point c = target.pixel_center(col, row);
            // Source coordinates relative to pixel centres.
            const double fc = src.col_of(c.x) - 0.5;
            const double fr = src.row_of(c.y) - 0.5;
            const double c0 = std::floor(fc);
            const double r0 = std::floor(fr);
            const double tx = fc - c0;
            const double ty = fr - r0;

            double acc = 0.0;
            bool ok = true;
            const double wx[2] = {1.0 - tx, tx};
            const double wy[2] = {1.0 - ty, ty};
            for (int j = 0; j < 2 && ok; ++j) {
                for (int i = 0; i < 2 && ok; ++i) {
                    const double w = wx[i] * wy[j];
                    if (w == 0.0) continue;
                    const double sc = c0 + i;
                    const double sr = r0 + j;
                    if (sc < 0 || sr < 0 || sc >= src.width || sr >= src.height) {
                        ok = false;
                        break;
                    }
                    const float v = raster.at(static_cast<int>(sc), static_cast<int>(sr));
                    if (raster.is_nodata(v)) {
                        ok = false;
                        break;
                    }
                    acc += w * v;
                }
            }
            if (ok) out.at(col, row) = static_cast<float>(acc);
        }
    }
    return out;
}

Mask rasterize_polygon(const Polygon& polygon, const GridGeometry& grid) {
    grid.validate();
    auto degenerate = [](const Ring& ring) {
        return ring.size() < 4 || !(ring.front() == ring.back()) || signed_area2(ring) == 0.0;
    };
    if (degenerate(polygon.exterior)) throw Error(ErrorCode::degenerate_polygon, "exterior ring is degenerate");
    for (const auto& h : polygon.holes) {
        if (degenerate(h)) throw Error(ErrorCode::degenerate_polygon, "hole ring is degenerate");
    }

    Mask mask(grid);
    std::vector<double> xs;
    const auto center_x = [&](int c) { return grid.origin_x + (c + 0.5) * grid.pixel_size_x; };
    for (int row = 0; row < grid.height; ++row) {
        const double y = grid.origin_y - (row + 0.5) * grid.pixel_size_y;
        xs.clear();
        auto collect = [&](const Ring& ring) {
            for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
                if ((ring[i].y > y) != (ring[j].y > y)) xs.push_back(edge_crossing_x(ring[i], ring[j], y));
            }
        };
        collect(polygon.exterior);
        for (const auto& h : polygon.holes) collect(h);
        std::sort(xs.begin(), xs.end());

        // A centre px is inside iff an odd number of crossings lie strictly to
        // its right, i.e. px ∈ [xs[2i], xs[2i+1]).
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            const double lo = xs[k];
            const double hi = xs[k + 1];
            int c = static_cast<int>(std::ceil((lo - grid.origin_x) / grid.pixel_size_x - 0.5));
            c = std::clamp(c, 0, grid.width);
            while (c > 0 && center_x(c - 1) >= lo) --c;
            while (c < grid.width && center_x(c) < lo) ++c;
            for (; c < grid.width && center_x(c) < hi; ++c) mask.set(c, row);
        }
    }
    return mask;
}

Mask erode_disk(const Mask& mask, double radius_m) {
    const auto& g = mask.geometry;
    if (g.pixel_size_x != g.pixel_size_y) {
        throw Error(ErrorCode::anisotropic_pixels,
                    fmt::format("erosion needs square pixels, got {} x {}", g.pixel_size_x, g.pixel_size_y));
    }
    if (!(radius_m >= 0.0)) throw Error(ErrorCode::invalid_argument, "erosion radius must be >= 0");
    const double r = radius_m / g.pixel_size_x;
    const double r2 = r * r;
    const int reach = static_cast<int>(std::floor(r));
    if (reach == 0) return mask;

    // Half-width of the disk at each row offset: largest w with w² + dy² ≤ r².
    std::vector<int> half(reach + 1);
    for (int dy = 0; dy <= reach; ++dy) {
        int w = 0;
        while (static_cast<double>(w + 1) * (w + 1) + static_cast<double>(dy) * dy <= r2) ++w;
        half[dy] = w;
    }

    // Row prefix sums of set pixels.
    const int W = g.width;
    const int H = g.height;
    std::vector<int> prefix(static_cast<std::size_t>(H) * (W + 1), 0);
    for (int row = 0; row < H; ++row) {
        int* p = &prefix[static_cast<std::size_t>(row) * (W + 1)];
        for (int c = 0; c < W; ++c) p[c + 1] = p[c] + (mask.test(c, row) ? 1 : 0);
    }
    auto run_full = [&](int row, int c0, int c1) {  // inclusive
        if (row < 0 || row >= H || c0 < 0 || c1 >= W) return false;
        const int* p = &prefix[static_cast<std::size_t>(row) * (W + 1)];
        return p[c1 + 1] - p[c0] == c1 - c0 + 1;
    };

    Mask out(g);
    for (int row = 0; row < H; ++row) {
        for (int c = 0; c < W; ++c) {
            if (!mask.test(c, row)) continue;
            bool keep = true;
            for (int dy = -reach; dy <= reach && keep; ++dy) {
                const int w = half[std::abs(dy)];
                keep = run_full(row + dy, c - w, c + w);
            }
            if (keep) out.set(c, row);
        }
    }
    return out;
}

}  // namespace fieldbabel
