#include <gtest/gtest.h>

#include <cstring>

#include "fixtures.hpp"
#include "fieldbabel/error.hpp"
#include "fieldbabel/project.hpp"
#include "fieldbabel/zip.hpp"

using namespace fbtest;

namespace {

std::vector<std::uint8_t> bytes(std::string_view s) { return {s.begin(), s.end()}; }

std::uint32_t u32(const std::vector<std::uint8_t>& b, std::size_t at) {
    return b[at] | b[at + 1] << 8 | b[at + 2] << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}
std::uint16_t u16(const std::vector<std::uint8_t>& b, std::size_t at) { return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8); }

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error";
    return ErrorCode::io_error;
}

MultiBandRaster composite(std::vector<float> vv, std::vector<float> vh, std::vector<float> ratio) {
    MultiBandRaster m;
    m.geometry = make_grid(static_cast<int>(vv.size()), 1, 0, 10);
    m.bands = {std::move(vv), std::move(vh), std::move(ratio)};
    return m;
}

}  // namespace

TEST(Zip, RoundTripSortedByName) {
    std::vector<ZipEntry> in{{"b/two.txt", bytes("second")}, {"a.txt", bytes("123456789")}, {"empty", {}}};
    const auto z = write_zip(in);
    const auto out = read_zip(z);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].name, "a.txt");
    EXPECT_EQ(out[1].name, "b/two.txt");
    EXPECT_EQ(out[2].name, "empty");
    EXPECT_EQ(out[0].data, bytes("123456789"));
    EXPECT_TRUE(out[2].data.empty());
}

TEST(Zip, LocalHeaderLayout) {
    const auto z = write_zip({{"a.txt", bytes("123456789")}});
    EXPECT_EQ(u32(z, 0), 0x04034b50u);
    EXPECT_EQ(u16(z, 8), 0);          // stored
    EXPECT_EQ(u16(z, 10), 0);         // 00:00
    EXPECT_EQ(u16(z, 12), 0x21);      // 1980-01-01
    EXPECT_EQ(u32(z, 14), 0xCBF43926u);  // CRC-32 check value of "123456789"
    EXPECT_EQ(u32(z, 18), 9u);
    EXPECT_EQ(u32(z, 22), 9u);
    EXPECT_EQ(u16(z, 26), 5);
    EXPECT_EQ(std::memcmp(z.data() + 30, "a.txt123456789", 14), 0);
    // end of central directory, no comment
    EXPECT_EQ(u32(z, z.size() - 22), 0x06054b50u);
    EXPECT_EQ(u16(z, z.size() - 12), 1);
}

TEST(Zip, DeterministicBytes) {
    const std::vector<ZipEntry> a{{"x", bytes("1")}, {"y", bytes("2")}};
    const std::vector<ZipEntry> b{{"y", bytes("2")}, {"x", bytes("1")}};
    EXPECT_EQ(write_zip(a), write_zip(b));
}

TEST(Zip, Errors) {
    EXPECT_EQ(code_of([] { write_zip({{"x", {}}, {"x", {}}}); }), ErrorCode::invalid_argument);
    auto z = write_zip({{"a.txt", bytes("123456789")}});
    z[30 + 5] ^= 1;  // flip a payload bit
    EXPECT_EQ(code_of([&] { read_zip(z); }), ErrorCode::unsupported_format);
    EXPECT_EQ(code_of([] { read_zip(bytes("PK nope")); }), ErrorCode::unsupported_format);
    EXPECT_EQ(code_of([] { read_zip({}); }), ErrorCode::unsupported_format);
}

TEST(Project, ReferencesEveryLayerWithItsStretch) {
    ColorRanges ranges;
    ranges.vv = {-21.5, -3};
    const std::vector<ProjectLayer> layers{
        {LayerKind::composite, "composites/S1A & co.tif", "S1A & co", 32632},
        {LayerKind::parcels, "parcels/parcels.shp", "parcels", 4326},
        {LayerKind::table, "timeseries/DK-1.csv", "DK-1", 4326},
    };
    const auto doc = build_project_descriptor(layers, ranges, RatioMode::db_difference, "t");
    EXPECT_EQ(project_datasources(doc),
              (std::vector<std::string>{"composites/S1A & co.tif", "parcels/parcels.shp", "timeseries/DK-1.csv"}));
    EXPECT_NE(doc.find("S1A &amp; co"), std::string::npos);
    EXPECT_NE(doc.find("<authid>EPSG:32632</authid>"), std::string::npos);
    EXPECT_NE(doc.find("<minValue>-21.5</minValue>"), std::string::npos);
    EXPECT_NE(doc.find("<minValue>2</minValue>"), std::string::npos);     // difference stretch
    EXPECT_EQ(doc.find("<minValue>0.3</minValue>"), std::string::npos);  // not the quotient one
    EXPECT_NE(doc.find("geometry=\"No geometry\""), std::string::npos);
    EXPECT_EQ(doc, build_project_descriptor(layers, ranges, RatioMode::db_difference, "t"));
    EXPECT_TRUE(project_datasources(build_project_descriptor({}, ranges, RatioMode::db_quotient)).empty());
}

TEST(Project, PercentileRangesNearestRank) {
    std::vector<float> up(100), down(100), q(100), d(100);
    for (int i = 0; i < 100; ++i) {
        up[i] = static_cast<float>(i + 1);        // 1..100
        down[i] = static_cast<float>(-(i + 1));   // -1..-100
        q[i] = static_cast<float>(i) / 100.0f;    // 0..0.99
        d[i] = static_cast<float>(i + 1000);
    }
    auto qc = composite(up, down, q);
    qc.bands[2][50] = qc.nodata;
    const auto dc = composite(down, up, d);
    const auto r = percentile_ranges({qc}, {dc});
    // 200 values each for vv/vh: ranks 4 and 196
    EXPECT_EQ(r.vv, (BandRange{-97, 96}));
    EXPECT_EQ(r.vh, (BandRange{-97, 96}));
    // 99 quotient values after the nodata: ranks 2 and 98 of 0.00..0.99 without 0.50
    EXPECT_DOUBLE_EQ(r.db_quotient.min, 0.01f);
    EXPECT_DOUBLE_EQ(r.db_quotient.max, 0.98f);
    EXPECT_EQ(r.db_difference, (BandRange{1001, 1097}));
    // nothing to measure: defaults stay
    EXPECT_EQ(percentile_ranges({}, {}), ColorRanges{});
    EXPECT_EQ(code_of([] { percentile_ranges({}, {}, 0.5, 0.5); }), ErrorCode::invalid_argument);
}
