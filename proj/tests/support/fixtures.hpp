#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fieldbabel/catalog.hpp"
#include "fieldbabel/config.hpp"
#include "fieldbabel/geometry.hpp"
#include "fieldbabel/parcels.hpp"
#include "fieldbabel/raster.hpp"

namespace fbtest {

namespace fs = std::filesystem;
using namespace fieldbabel;

// mkdtemp under $TMPDIR, removed recursively on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "fb");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

GridGeometry make_grid(int width, int height, double origin_x, double origin_y, double pixel = 10.0, int crs = 32632);

// Single-look intensity speckle: mean · Exp(1).
Raster exponential_speckle(const GridGeometry& g, double mean, std::uint64_t seed);

// Closed counter-clockwise rectangle.
Polygon rect(double x0, double y0, double x1, double y1);
Polygon rect(const BBox& b);

std::string polygon_geojson(const Polygon& p);
std::string feature_collection(const std::vector<Polygon>& polys);

std::string slurp(const fs::path& p);
void spit(const fs::path& p, const std::string& text);

// Desk-scale world around lon 10.4-10.5, lat 55.09-55.15 on UTM 32N.
//   4 dual-pol scenes, 3 inside the winter-wheat 2017 window, 1 after it
//   5 LPIS parcels, one outside the AOI, one too narrow to survive erosion
//   growth-stage observations for DK-1001
struct DeskScene {
    std::string scene_id;
    std::string acquired_at;
    Pass pass = Pass::ascending;
    int orbit = 0;
};

struct Desk {
    fs::path root;
    fs::path config_path;
    ServiceConfig config;
    std::vector<FieldParcel> parcels;
    std::vector<DeskScene> scenes;
    std::vector<SceneInput> inputs;
};

inline constexpr int kDeskSceneSize = 600;
inline const BBox kDeskAoi{10.40, 55.05, 10.60, 55.25};

std::vector<FieldParcel> desk_parcels();
// σ⁰ (linear) inside a parcel for scene index k; background elsewhere.
std::pair<double, double> desk_backscatter(const std::string& parcel_id, int k);

// Writes rasters, sidecars, LPIS shapefile, stage CSV and config.json.
Desk make_desk(const fs::path& root, int scene_size = kDeskSceneSize);

void ingest_desk(SceneCatalog& catalog, const Desk& desk);

}  // namespace fbtest
