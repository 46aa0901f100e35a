#include "fixtures.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fieldbabel/analytics.hpp"
#include "fieldbabel/crs.hpp"
#include "fieldbabel/geojson.hpp"
#include "fieldbabel/geotiff.hpp"
#include "fieldbabel/time.hpp"

namespace fbtest {

TempDir::TempDir(const std::string& tag) {
    const char* base = std::getenv("TMPDIR");
    std::string templ = (fs::path(base && *base ? base : "/tmp") / (tag + "-XXXXXX")).string();
    if (!mkdtemp(templ.data())) throw std::runtime_error("mkdtemp failed");
    path_ = templ;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

GridGeometry make_grid(int width, int height, double origin_x, double origin_y, double pixel, int crs) {
    GridGeometry g;
    g.width = width;
    g.height = height;
    g.origin_x = origin_x;
    g.origin_y = origin_y;
    g.pixel_size_x = pixel;
    g.pixel_size_y = pixel;
    g.crs = crs;
    return g;
}

Raster exponential_speckle(const GridGeometry& g, double mean, std::uint64_t seed) {
    Raster r(g, 0.0f);
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> e(1.0);
    for (auto& v : r.values) v = static_cast<float>(mean * e(rng));
    return r;
}

Polygon rect(double x0, double y0, double x1, double y1) {
    return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}, {}};
}

Polygon rect(const BBox& b) { return rect(b.min_x, b.min_y, b.max_x, b.max_y); }

std::string polygon_geojson(const Polygon& p) { return polygon_to_geojson(p); }

std::string feature_collection(const std::vector<Polygon>& polys) {
    nlohmann::json fc{{"type", "FeatureCollection"}, {"features", nlohmann::json::array()}};
    for (const auto& p : polys) {
        fc["features"].push_back(
            {{"type", "Feature"}, {"properties", nlohmann::json::object()}, {"geometry", nlohmann::json::parse(polygon_to_geojson(p))}});
    }
    return fc.dump();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::vector<FieldParcel> desk_parcels() {
    auto holed = rect(10.470, 55.110, 10.476, 55.113);
    holed.holes.push_back({{10.472, 55.111}, {10.472, 55.112}, {10.474, 55.112}, {10.474, 55.111}, {10.472, 55.111}});
    return {
        {"DK-1001", "Vinterhvede", rect(10.430, 55.100, 10.436, 55.103), std::string("A-17")},
        {"DK-1002", "Vinterhvede", rect(10.450, 55.120, 10.455, 55.1225), std::nullopt},
        {"DK-1003", "Vårbyg", holed, std::string("A-17")},
        {"DK-1004", "Vinterhvede", rect(10.480, 55.130, 10.4806, 55.1305), std::nullopt},
        {"DK-2001", "Vinterhvede", rect(11.200, 55.300, 11.205, 55.303), std::nullopt},
    };
}

std::pair<double, double> desk_backscatter(const std::string& parcel_id, int k) {
    if (parcel_id == "DK-1001" || parcel_id == "DK-1004") return {0.04 + 0.02 * k, 0.006 + 0.004 * k};
    if (parcel_id == "DK-1002") return {0.08 - 0.01 * k, 0.02};
    if (parcel_id == "DK-1003") return {0.03, 0.004 + 0.001 * k};
    return {0.05, 0.008};
}

namespace {

const std::vector<DeskScene>& desk_scenes() {
    static const std::vector<DeskScene> s{
        {"S1A_20170310T170500_117", "2017-03-10T17:05:00Z", Pass::ascending, 117},
        {"S1B_20170415T054000_66", "2017-04-15T05:40:00Z", Pass::descending, 66},
        {"S1A_20170520T170500_117", "2017-05-20T17:05:00Z", Pass::ascending, 117},
        {"S1A_20171105T170500_117", "2017-11-05T17:05:00Z", Pass::ascending, 117},
    };
    return s;
}

constexpr double kGain = 800.0;

}  // namespace

Desk make_desk(const fs::path& root, int scene_size) {
    Desk d;
    d.root = root;
    d.parcels = desk_parcels();
    d.scenes = desk_scenes();
    fs::create_directories(root / "incoming");

    std::vector<std::pair<std::string, Polygon>> projected;
    for (const auto& p : d.parcels) projected.emplace_back(p.parcel_id, project_polygon(p.geometry, 32632));

    for (int k = 0; k < static_cast<int>(d.scenes.size()); ++k) {
        const auto& s = d.scenes[k];
        // Scene grids sit off the analysis lattice so ingestion has to resample.
        const auto g = make_grid(scene_size, scene_size, 590000.0 + 3.0 * k, 6112000.0 - 2.0 * k);
        Raster vv = exponential_speckle(g, 1.0, 1000 + 2 * k);
        Raster vh = exponential_speckle(g, 1.0, 1001 + 2 * k);
        for (int row = 0; row < g.height; ++row) {
            for (int col = 0; col < g.width; ++col) {
                const auto c = g.pixel_center(col, row);
                auto sigma = desk_backscatter("", k);
                for (const auto& [id, poly] : projected) {
                    if (polygon_contains(poly, c)) {
                        sigma = desk_backscatter(id, k);
                        break;
                    }
                }
                auto dn = [](double speckle, double s0) {
                    return static_cast<float>(std::min(65535.0, std::round(kGain * std::sqrt(speckle * s0))));
                };
                vv.at(col, row) = dn(vv.at(col, row), sigma.first);
                vh.at(col, row) = dn(vh.at(col, row), sigma.second);
            }
        }
        SceneInput in;
        in.vv = root / "incoming" / (s.scene_id + "_VV.tif");
        in.vh = root / "incoming" / (s.scene_id + "_VH.tif");
        in.sidecar = root / "incoming" / (s.scene_id + ".json");
        write_geotiff(vv, *in.vv, SampleType::uint16);
        write_geotiff(vh, *in.vh, SampleType::uint16);
        SceneMetadata meta;
        meta.scene_id = s.scene_id;
        meta.acquired_at = parse_timestamp(s.acquired_at);
        meta.pass = s.pass;
        meta.relative_orbit = s.orbit;
        meta.calibration[Polarization::VV] = constant_lut(kGain);
        meta.calibration[Polarization::VH] = constant_lut(kGain);
        spit(in.sidecar, sidecar_json(meta));
        d.inputs.push_back(in);
    }

    fs::create_directories(root / "lpis");
    write_parcels_shapefile(d.parcels, root / "lpis" / "marker");
    spit(root / "stages.csv",
         "parcel_id,date,stage\n"
         "DK-1001,2017-03-01,21\n"
         "DK-1001,2017-04-20,31\n"
         "DK-1001,2017-06-01,55\n");

    const nlohmann::json config{
        {"catalog_root", "catalog"},
        {"state_dir", "state"},
        {"grid", {{"crs", 32632}, {"origin_x", 500000}, {"origin_y", 6200000}, {"pixel_size", 10}}},
        {"lpis", {{"shp", "lpis/marker.shp"}, {"dbf", "lpis/marker.dbf"}}},
        {"growth_stages_csv", "stages.csv"},
        {"erosion_m", 30},
        {"workers", 1},
        {"bind", "127.0.0.1:0"},
        {"public_url", "http://127.0.0.1:8080"},
    };
    d.config_path = root / "config.json";
    spit(d.config_path, config.dump(2));
    d.config = load_service_config(d.config_path);
    return d;
}

void ingest_desk(SceneCatalog& catalog, const Desk& desk) {
    for (const auto& in : desk.inputs) catalog.ingest_scene(in);
}

}  // namespace fbtest
