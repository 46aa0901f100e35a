#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "fixtures.hpp"
#include "fieldbabel/bytes.hpp"
#include "fieldbabel/error.hpp"
#include "fieldbabel/geotiff.hpp"
#include "fieldbabel/parcels.hpp"

using namespace fbtest;

namespace {

// Minimal little-endian TIFF writer, independent of the library encoder.
struct Tag {
    std::uint16_t tag;
    std::uint16_t type;  // 2 ASCII, 3 SHORT, 4 LONG, 12 DOUBLE
    std::vector<double> values;
    std::string text;
};

void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(v & 0xff);
    b.push_back(v >> 8);
}
void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

std::vector<std::uint8_t> tiny_tiff(std::vector<Tag> tags, const std::vector<std::uint8_t>& pixels) {
    tags.push_back({273, 4, {0}, {}});  // StripOffsets, patched below
    std::sort(tags.begin(), tags.end(), [](const Tag& a, const Tag& b) { return a.tag < b.tag; });
    auto payload = [](const Tag& t) {
        std::vector<std::uint8_t> p;
        if (t.type == 2) {
            p.assign(t.text.begin(), t.text.end());
            p.push_back(0);
        }
        for (double v : t.values) {
            if (t.type == 3) put16(p, static_cast<std::uint16_t>(v));
            if (t.type == 4) put32(p, static_cast<std::uint32_t>(v));
            if (t.type == 12) {
                std::uint64_t u;
                std::memcpy(&u, &v, 8);
                put32(p, u & 0xffffffffu);
                put32(p, u >> 32);
            }
        }
        return p;
    };
    const std::uint32_t ifd_size = 2 + 12 * tags.size() + 4;
    std::uint32_t extra = 8 + ifd_size;
    std::vector<std::uint8_t> overflow;
    std::vector<std::pair<std::size_t, std::uint32_t>> offsets;
    for (const auto& t : tags) {
        const auto p = payload(t);
        if (p.size() > 4) {
            offsets.emplace_back(&t - tags.data(), extra + overflow.size());
            overflow.insert(overflow.end(), p.begin(), p.end());
            if (overflow.size() % 2) overflow.push_back(0);
        }
    }
    const std::uint32_t pixel_at = extra + overflow.size();
    for (auto& t : tags) {
        if (t.tag == 273) t.values = {double(pixel_at)};
    }
    std::vector<std::uint8_t> b{'I', 'I', 42, 0};
    put32(b, 8);
    put16(b, static_cast<std::uint16_t>(tags.size()));
    for (std::size_t i = 0; i < tags.size(); ++i) {
        const auto& t = tags[i];
        put16(b, t.tag);
        put16(b, t.type);
        put32(b, t.type == 2 ? t.text.size() + 1 : t.values.size());
        const auto p = payload(t);
        if (p.size() > 4) {
            const auto it = std::find_if(offsets.begin(), offsets.end(), [&](const auto& o) { return o.first == i; });
            put32(b, it->second);
        } else {
            auto q = p;
            q.resize(4, 0);
            b.insert(b.end(), q.begin(), q.end());
        }
    }
    put32(b, 0);
    b.insert(b.end(), overflow.begin(), overflow.end());
    b.insert(b.end(), pixels.begin(), pixels.end());
    return b;
}

std::vector<Tag> base_tags(int w, int h, bool georef, int compression = 1, int spp = 1) {
    std::vector<Tag> t{
        {256, 4, {double(w)}, {}},
        {257, 4, {double(h)}, {}},
        {258, 3, std::vector<double>(spp, 32), {}},
        {259, 3, {double(compression)}, {}},
        {262, 3, {1}, {}},
        {277, 3, {double(spp)}, {}},
        {278, 4, {double(h)}, {}},
        {279, 4, {double(w * h * 4 * spp)}, {}},
        {339, 3, std::vector<double>(spp, 3), {}},
    };
    if (spp > 1) t.push_back({284, 3, {1}, {}});
    if (georef) {
        t.push_back({33550, 12, {10, 10, 0}, {}});
        t.push_back({33922, 12, {0, 0, 0, 590000, 6112000, 0}, {}});
        t.push_back({34735, 3, {1, 1, 0, 3, 1024, 0, 1, 1, 1025, 0, 1, 1, 3072, 0, 1, 32632}, {}});
    }
    return t;
}

std::vector<std::uint8_t> float_pixels(const std::vector<float>& v) {
    std::vector<std::uint8_t> b(v.size() * 4);
    std::memcpy(b.data(), v.data(), b.size());
    return b;
}

template <typename F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return static_cast<ErrorCode>(-1);
}

}  // namespace

TEST(GeoTiff, ReadsIndependentlyWrittenFile) {
    const std::vector<float> px{1.5f, -2.0f, 3.25f, 0.0f, 7.0f, 1e-3f};
    const auto bytes = tiny_tiff(base_tags(3, 2, true), float_pixels(px));
    const auto r = decode_geotiff(bytes);
    ASSERT_EQ(r.band_count(), 1u);
    EXPECT_EQ(r.geometry.width, 3);
    EXPECT_EQ(r.geometry.height, 2);
    EXPECT_EQ(r.geometry.origin_x, 590000);
    EXPECT_EQ(r.geometry.origin_y, 6112000);
    EXPECT_EQ(r.geometry.pixel_size_x, 10);
    EXPECT_EQ(r.geometry.crs, 32632);
    EXPECT_EQ(r.bands[0], px);
}

TEST(GeoTiff, DistinctErrorCodes) {
    const std::vector<float> px(6, 1.0f);
    EXPECT_EQ(code_of([&] { decode_geotiff(tiny_tiff(base_tags(3, 2, false), float_pixels(px))); }),
              ErrorCode::missing_georeferencing);
    EXPECT_EQ(code_of([&] { decode_geotiff(tiny_tiff(base_tags(3, 2, true, 5), float_pixels(px))); }),
              ErrorCode::unsupported_format);
    const auto good = tiny_tiff(base_tags(3, 2, true), float_pixels(px));
    EXPECT_EQ(code_of([&] { decode_geotiff(std::span(good).first(good.size() - 5)); }), ErrorCode::io_error);
    const std::vector<std::uint8_t> junk{'M', 'Z', 0, 0};
    EXPECT_NE(code_of([&] { decode_geotiff(junk); }), static_cast<ErrorCode>(-1));

    TempDir tmp;
    const auto three = tiny_tiff(base_tags(2, 1, true, 1, 3), float_pixels(std::vector<float>(6, 2.0f)));
    write_file_atomic(tmp / "rgb.tif", three);
    EXPECT_EQ(code_of([&] { read_geotiff(tmp / "rgb.tif"); }), ErrorCode::multi_band);
    EXPECT_EQ(read_geotiff_bands(tmp / "rgb.tif").band_count(), 3u);
    EXPECT_EQ(code_of([&] { read_geotiff(tmp / "absent.tif"); }), ErrorCode::io_error);
}

TEST(GeoTiff, RoundTripsThroughFiles) {
    TempDir tmp;
    Raster r = exponential_speckle(make_grid(300, 7, 1.5, 88.25, 0.25, 4326), 1, 5);
    r.at(3, 3) = r.nodata;
    write_geotiff(r, tmp / "a.tif");
    EXPECT_EQ(read_geotiff(tmp / "a.tif"), r);
    Raster dn(make_grid(5, 5, 0, 50), 0.0f);
    for (int i = 0; i < 25; ++i) dn.values[i] = static_cast<float>(i * 2000);
    write_geotiff(dn, tmp / "dn.tif", SampleType::uint16);
    EXPECT_EQ(read_geotiff(tmp / "dn.tif").values, dn.values);
}

namespace {

// Hand-built two-record polygon shapefile following the published layout.
struct ShpFixture {
    std::vector<std::uint8_t> shp, dbf;
};

void be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) b.push_back((v >> (8 * i)) & 0xff);
}
void le64(std::vector<std::uint8_t>& b, double d) {
    std::uint64_t u;
    std::memcpy(&u, &d, 8);
    for (int i = 0; i < 8; ++i) b.push_back((u >> (8 * i)) & 0xff);
}

ShpFixture two_record_fixture() {
    const Ring a{{10, 55}, {10, 55.01}, {10.01, 55.01}, {10.01, 55}, {10, 55}};          // clockwise
    const Ring b{{11, 56}, {11, 56.02}, {11.02, 56.02}, {11.02, 56}, {11, 56}};          // clockwise
    const Ring h{{11.005, 56.005}, {11.015, 56.005}, {11.015, 56.015}, {11.005, 56.015}, {11.005, 56.005}};  // ccw
    const std::vector<std::vector<Ring>> shapes{{a}, {b, h}};

    std::vector<std::vector<std::uint8_t>> records;
    for (const auto& parts : shapes) {
        std::vector<std::uint8_t> c;
        put32(c, 5);
        BBox bb = bbox_of(parts[0]);
        for (double v : {bb.min_x, bb.min_y, bb.max_x, bb.max_y}) le64(c, v);
        std::uint32_t npts = 0;
        for (const auto& r : parts) npts += r.size();
        put32(c, parts.size());
        put32(c, npts);
        std::uint32_t start = 0;
        for (const auto& r : parts) {
            put32(c, start);
            start += r.size();
        }
        for (const auto& r : parts) {
            for (const auto& p : r) {
                le64(c, p.x);
                le64(c, p.y);
            }
        }
        records.push_back(std::move(c));
    }
    ShpFixture f;
    std::uint32_t words = 50;
    for (const auto& r : records) words += 4 + r.size() / 2;
    be32(f.shp, 9994);
    for (int i = 0; i < 5; ++i) be32(f.shp, 0);
    be32(f.shp, words);
    put32(f.shp, 1000);
    put32(f.shp, 5);
    for (double v : {10.0, 55.0, 11.02, 56.02, 0.0, 0.0, 0.0, 0.0}) le64(f.shp, v);
    for (std::size_t i = 0; i < records.size(); ++i) {
        be32(f.shp, i + 1);
        be32(f.shp, records[i].size() / 2);
        f.shp.insert(f.shp.end(), records[i].begin(), records[i].end());
    }

    auto& d = f.dbf;
    const std::vector<std::pair<std::string, int>> fields{{"PARCEL_ID", 12}, {"crop_code", 20}};
    d = {0x03, 124, 1, 1};
    put32(d, 2);
    put16(d, 32 + 32 * fields.size() + 1);
    put16(d, 1 + 12 + 20);
    d.resize(32, 0);
    for (const auto& [name, len] : fields) {
        std::vector<std::uint8_t> fd(32, 0);
        std::memcpy(fd.data(), name.data(), name.size());
        fd[11] = 'C';
        fd[16] = static_cast<std::uint8_t>(len);
        d.insert(d.end(), fd.begin(), fd.end());
    }
    d.push_back(0x0d);
    auto cell = [&](const std::string& s, int len) {
        std::string v = s;
        v.resize(len, ' ');
        d.insert(d.end(), v.begin(), v.end());
    };
    d.push_back(' ');
    cell("F1", 12);
    cell("Vinterhvede", 20);
    d.push_back(' ');
    cell("F2", 12);
    cell("Vårbyg", 20);
    d.push_back(0x1a);
    return f;
}

}  // namespace

TEST(Shapefile, ReadsHandBuiltFixture) {
    const auto f = two_record_fixture();
    ParcelColumns cols;
    cols.parcel_id = "PARCEL_ID";
    const auto parcels = decode_parcels_shapefile(f.shp, f.dbf, cols);
    ASSERT_EQ(parcels.size(), 2u);
    EXPECT_EQ(parcels[0].parcel_id, "F1");
    EXPECT_EQ(parcels[0].crop_code, "Vinterhvede");
    EXPECT_FALSE(parcels[0].applicant_id.has_value());
    EXPECT_EQ(parcels[1].crop_code, "Vårbyg");
    EXPECT_EQ(parcels[0].geometry.exterior, (Ring{{10, 55}, {10.01, 55}, {10.01, 55.01}, {10, 55.01}, {10, 55}}));
    ASSERT_EQ(parcels[1].geometry.holes.size(), 1u);
    EXPECT_GT(signed_area2(parcels[1].geometry.exterior), 0);
    EXPECT_LT(signed_area2(parcels[1].geometry.holes[0]), 0);
    EXPECT_EQ(bbox_of(parcels[1].geometry.holes[0]), (BBox{11.005, 56.005, 11.015, 56.015}));
}

TEST(Shapefile, ErrorCodes) {
    const auto f = two_record_fixture();
    ParcelColumns cols;
    cols.parcel_id = "PARCEL_ID";
    EXPECT_EQ(code_of([&] { decode_parcels_shapefile(f.shp, f.dbf); }), ErrorCode::missing_column);
    auto wrong_type = f.shp;
    wrong_type[32] = 1;  // header shape type: point
    EXPECT_EQ(code_of([&] { decode_parcels_shapefile(wrong_type, f.dbf, cols); }), ErrorCode::shape_type_mismatch);
    auto one_record = f.dbf;
    one_record[4] = 1;
    EXPECT_EQ(code_of([&] { decode_parcels_shapefile(f.shp, one_record, cols); }), ErrorCode::record_count_mismatch);
    EXPECT_EQ(code_of([&] { decode_parcels_shapefile(std::span(f.shp).first(120), f.dbf, cols); }), ErrorCode::io_error);
}

TEST(Shapefile, WritesDeterministicFilesAndClips) {
    TempDir tmp;
    const auto parcels = desk_parcels();
    write_parcels_shapefile(parcels, tmp / "p");
    EXPECT_TRUE(fs::exists(tmp / "p.shx"));
    EXPECT_EQ(read_parcels_shapefile(tmp / "p.shp", tmp / "p.dbf"), parcels);
    const auto again = encode_parcels_shapefile(parcels);
    EXPECT_EQ(slurp(tmp / "p.shp"), std::string(again.shp.begin(), again.shp.end()));

    const auto clipped = clip_parcels_bbox(parcels, kDeskAoi);
    EXPECT_EQ(clipped.size(), 4u);
    for (const auto& p : parcels) {
        const bool want = bbox_of(p.geometry).intersects(kDeskAoi);
        EXPECT_EQ(std::count(clipped.begin(), clipped.end(), p), want ? 1 : 0) << p.parcel_id;
    }
    EXPECT_EQ(clip_parcels_bbox(parcels, {-180, -90, 180, 90}), parcels);
}
