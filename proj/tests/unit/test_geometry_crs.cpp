#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "fieldbabel/crs.hpp"
#include "fieldbabel/error.hpp"
#include "fieldbabel/geometry.hpp"

using namespace fbtest;

namespace {

struct UtmCase {
    double lon, lat;
    int epsg;
    double e, n;
};

// Reference values from PROJ (pyproj 3, EPSG:4326 -> UTM, always_xy).
const UtmCase kUtm[] = {
    {9.0, 55.0, 32632, 500000.0000, 6094791.4210},
    {10.4, 55.1, 32632, 589330.0103, 6106814.5778},
    {12.5, 56.0, 32632, 718236.5094, 6211608.4678},
    {6.2, 54.5, 32632, 318691.1831, 6042762.1354},
    {15.0, -33.0, 32733, 500000.0000, 6348713.0560},
};

}  // namespace

TEST(Crs, MatchesProjReferencePoints) {
    for (const auto& c : kUtm) {
        const auto p = project_point({c.lon, c.lat}, c.epsg);
        EXPECT_NEAR(p.x, c.e, 1e-3) << c.lon << "," << c.lat;
        EXPECT_NEAR(p.y, c.n, 1e-3) << c.lon << "," << c.lat;
    }
}

TEST(Crs, InverseRoundTrips) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lon(6.0, 12.0), lat(-80.0, 84.0);
    for (int i = 0; i < 1000; ++i) {
        const Point ll{lon(rng), lat(rng)};
        const int epsg = ll.y >= 0 ? 32632 : 32732;
        const auto back = unproject_point(project_point(ll, epsg), epsg);
        // 1e-8 deg is about a millimetre
        EXPECT_NEAR(back.x, ll.x, 1e-8);
        EXPECT_NEAR(back.y, ll.y, 1e-8);
    }
}

TEST(Crs, GeographicIsIdentityAndUnknownRejected) {
    EXPECT_EQ(project_point({10.5, 55.2}, 4326), (Point{10.5, 55.2}));
    EXPECT_TRUE(is_supported_crs(25832));
    EXPECT_FALSE(is_supported_crs(3857));
    try {
        project_point({0, 0}, 3857);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::crs_mismatch);
    }
}

TEST(Crs, ProjectedBboxCoversProjectedInterior) {
    const BBox ll{10.0, 55.0, 10.9, 55.8};
    const auto b = project_bbox(ll, 32632);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> x(ll.min_x, ll.max_x), y(ll.min_y, ll.max_y);
    for (int i = 0; i < 500; ++i) EXPECT_TRUE(b.contains(project_point({x(rng), y(rng)}, 32632)));
}

TEST(Geometry, EvenOddContainmentWithHole) {
    auto p = rect(0, 0, 10, 10);
    p.holes.push_back({{3, 3}, {3, 7}, {7, 7}, {7, 3}, {3, 3}});
    EXPECT_TRUE(polygon_contains(p, {1, 1}));
    EXPECT_FALSE(polygon_contains(p, {5, 5}));
    EXPECT_FALSE(polygon_contains(p, {11, 5}));
}

TEST(Geometry, ValidationCodes) {
    auto open = rect(0, 0, 1, 1);
    open.exterior.pop_back();
    try {
        validate_polygon(open);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::unclosed_ring);
    }
    Polygon tiny{{{0, 0}, {1, 0}, {0, 0}}, {}};
    EXPECT_THROW(validate_polygon(tiny), Error);
    auto stray = rect(0, 0, 1, 1);
    stray.holes.push_back({{5, 5}, {5, 6}, {6, 6}, {6, 5}, {5, 5}});
    try {
        validate_polygon(stray);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_polygon);
    }
}

TEST(Geometry, Rfc7946Orientation) {
    auto p = rect(0, 0, 4, 4);
    std::reverse(p.exterior.begin(), p.exterior.end());
    p.holes.push_back({{1, 1}, {2, 1}, {2, 2}, {1, 2}, {1, 1}});  // ccw
    const auto q = with_rfc7946_orientation(p);
    EXPECT_GT(signed_area2(q.exterior), 0);
    EXPECT_LT(signed_area2(q.holes[0]), 0);
}

TEST(Geometry, BboxIntersection) {
    EXPECT_EQ(intersection({0, 0, 2, 2}, {1, 1, 3, 3}), (BBox{1, 1, 2, 2}));
    EXPECT_FALSE(intersection({0, 0, 1, 1}, {2, 2, 3, 3}).has_value());
}
