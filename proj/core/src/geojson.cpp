#include "fieldbabel/geojson.hpp"

#include <json.hpp>
#include <fmt/format.h>

#include "fieldbabel/error.hpp"

namespace fieldbabel {

using nlohmann::json;

namespace {

Ring parse_ring(const json& j) {
    if (!j.is_array()) throw Error(ErrorCode::malformed_document, "polygon ring must be an array of positions");
    Ring ring;
    for (const auto& pos : j) {
        if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
            throw Error(ErrorCode::malformed_document, "position must be an array of at least two numbers");
        }
        ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
    }
    if (ring.empty()) throw Error(ErrorCode::malformed_document, "empty polygon ring");
    if (!(ring.front() == ring.back())) throw Error(ErrorCode::unclosed_ring, "polygon ring is not closed");
    return ring;
}

Polygon parse_geometry(const json& g) {
    if (!g.is_object() || !g.contains("type") || !g["type"].is_string()) {
        throw Error(ErrorCode::malformed_document, "geometry object without a type");
    }
    const auto type = g["type"].get<std::string>();
    if (type == "GeometryCollection") {
        const auto it = g.find("geometries");
        if (it == g.end() || !it->is_array()) throw Error(ErrorCode::malformed_document, "GeometryCollection without geometries");
        if (it->size() != 1) {
            throw Error(ErrorCode::not_single_polygon, fmt::format("expected a single polygon, found {} geometries", it->size()));
        }
        return parse_geometry((*it)[0]);
    }
    if (type == "MultiPolygon") {
        throw Error(ErrorCode::not_single_polygon, "expected a single polygon, found a MultiPolygon");
    }
    if (type != "Polygon") {
        throw Error(ErrorCode::not_polygon_type, fmt::format("geometry type '{}' is not Polygon", type));
    }
    const auto it = g.find("coordinates");
    if (it == g.end() || !it->is_array() || it->empty()) {
        throw Error(ErrorCode::malformed_document, "Polygon without coordinates");
    }
    Polygon p;
    p.exterior = parse_ring((*it)[0]);
    for (std::size_t i = 1; i < it->size(); ++i) p.holes.push_back(parse_ring((*it)[i]));
    validate_polygon(p);
    return with_rfc7946_orientation(std::move(p));
}

Polygon parse_feature(const json& f) {
    const auto it = f.find("geometry");
    if (it == f.end() || it->is_null()) throw Error(ErrorCode::malformed_document, "feature without geometry");
    return parse_geometry(*it);
}

json ring_json(const Ring& ring) {
    json arr = json::array();
    for (const auto& p : ring) arr.push_back({p.x, p.y});
    return arr;
}

}  // namespace

Polygon parse_geojson_polygon(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::malformed_document, fmt::format("GeoJSON is not valid JSON: {}", e.what()));
    }
    if (!doc.is_object() || !doc.contains("type") || !doc["type"].is_string()) {
        throw Error(ErrorCode::malformed_document, "GeoJSON document has no type");
    }
    const auto type = doc["type"].get<std::string>();
    if (type == "FeatureCollection") {
        const auto it = doc.find("features");
        if (it == doc.end() || !it->is_array()) throw Error(ErrorCode::malformed_document, "FeatureCollection without features");
        if (it->size() != 1) {
            throw Error(ErrorCode::not_single_polygon, fmt::format("expected a single polygon, found {} features", it->size()));
        }
        return parse_feature((*it)[0]);
    }
    if (type == "Feature") return parse_feature(doc);
    return parse_geometry(doc);
}

std::string polygon_to_geojson(const Polygon& polygon) {
    json coords = json::array();
    coords.push_back(ring_json(polygon.exterior));
    for (const auto& h : polygon.holes) coords.push_back(ring_json(h));
    return json{{"type", "Polygon"}, {"coordinates", coords}}.dump();
}

void validate_aoi(const Polygon& polygon) {
    // Decimal degrees rarely subtract exactly (11.3 - 10.3 > 1.0 in binary),
    // so the closed bound gets a nano-degree allowance.
    constexpr double kSlack = 1e-9;
    const auto box = bbox_of(polygon);
    if (box.width() > kMaxAoiSpanDeg + kSlack || box.height() > kMaxAoiSpanDeg + kSlack) {
        throw Error(ErrorCode::oversized_aoi,
                    fmt::format("AOI spans {:.6f}° longitude x {:.6f}° latitude; each span must be <= {}°",
                                box.width(), box.height(), kMaxAoiSpanDeg));
    }
}

}  // namespace fieldbabel
