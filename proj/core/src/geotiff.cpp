#include "fieldbabel/geotiff.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <string>

#include <fmt/format.h>

#include "fieldbabel/bytes.hpp"
#include "fieldbabel/error.hpp"

namespace fieldbabel {

namespace {

enum : std::uint16_t {
    kTagImageWidth = 256,
    kTagImageLength = 257,
    kTagBitsPerSample = 258,
    kTagCompression = 259,
    kTagPhotometric = 262,
    kTagStripOffsets = 273,
    kTagSamplesPerPixel = 277,
    kTagRowsPerStrip = 278,
    kTagStripByteCounts = 279,
    kTagPlanarConfig = 284,
    kTagExtraSamples = 338,
    kTagSampleFormat = 339,
    kTagModelPixelScale = 33550,
    kTagModelTiepoint = 33922,
    kTagGeoKeyDirectory = 34735,
    kTagGeoDoubleParams = 34736,
    kTagGeoAsciiParams = 34737,
    kTagGdalNodata = 42113,
};

enum : std::uint16_t { kTypeAscii = 2, kTypeShort = 3, kTypeLong = 4, kTypeDouble = 12 };

enum : std::uint16_t {
    kKeyModelType = 1024,
    kKeyRasterType = 1025,
    kKeyGeographicType = 2048,
    kKeyProjectedType = 3072,
};

constexpr std::size_t kStripTargetBytes = 64 * 1024;

bool is_geographic(int epsg) { return epsg >= 4000 && epsg < 5000; }

struct Entry {
    std::uint16_t tag;
    std::uint16_t type;
    std::uint32_t count;
    std::vector<std::uint8_t> payload;
};

Entry shorts(std::uint16_t tag, std::initializer_list<std::uint16_t> vs) {
    ByteWriter w;
    for (auto v : vs) w.u16le(v);
    return {tag, kTypeShort, static_cast<std::uint32_t>(vs.size()), w.take()};
}

Entry shorts(std::uint16_t tag, const std::vector<std::uint16_t>& vs) {
    ByteWriter w;
    for (auto v : vs) w.u16le(v);
    return {tag, kTypeShort, static_cast<std::uint32_t>(vs.size()), w.take()};
}

Entry longs(std::uint16_t tag, const std::vector<std::uint32_t>& vs) {
    ByteWriter w;
    for (auto v : vs) w.u32le(v);
    return {tag, kTypeLong, static_cast<std::uint32_t>(vs.size()), w.take()};
}

Entry doubles(std::uint16_t tag, const std::vector<double>& vs) {
    ByteWriter w;
    for (auto v : vs) w.f64le(v);
    return {tag, kTypeDouble, static_cast<std::uint32_t>(vs.size()), w.take()};
}

Entry ascii(std::uint16_t tag, const std::string& s) {
    ByteWriter w;
    w.bytes(s);
    w.u8(0);
    return {tag, kTypeAscii, static_cast<std::uint32_t>(s.size() + 1), w.take()};
}

std::string format_nodata(float v) {
    if (std::isnan(v)) return "nan";
    return fmt::format("{}", v);
}

std::uint16_t to_dn(float v) {
    if (!(v >= 0.0f && v <= 65535.0f) || std::trunc(v) != v) {
        throw Error(ErrorCode::unsupported_format,
                    fmt::format("value {} cannot be stored as a 16-bit digital number", v));
    }
    return static_cast<std::uint16_t>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_geotiff(const MultiBandRaster& raster, SampleType type) {
    const auto& g = raster.geometry;
    g.validate();
    const auto spp = raster.bands.size();
    if (spp != 1 && spp != 3) {
        throw Error(ErrorCode::unsupported_format, fmt::format("{} bands; only 1 or 3 are supported", spp));
    }
    for (const auto& b : raster.bands) {
        if (b.size() != g.size()) throw Error(ErrorCode::invalid_argument, "band length does not match grid");
    }

    const std::uint16_t bits = type == SampleType::float32 ? 32 : 16;
    const std::uint16_t format = type == SampleType::float32 ? 3 : 1;
    const std::size_t row_bytes = static_cast<std::size_t>(g.width) * spp * (bits / 8);
    const auto rows_per_strip =
        static_cast<std::uint32_t>(std::clamp<std::size_t>(kStripTargetBytes / row_bytes, 1, g.height));
    const std::uint32_t strip_count = (g.height + rows_per_strip - 1) / rows_per_strip;

    // Pixel data, interleaved by sample.
    ByteWriter pixels;
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t b = 0; b < spp; ++b) {
            const float v = raster.bands[b][i];
            if (type == SampleType::float32) {
                pixels.f32le(v);
            } else {
                pixels.u16le(to_dn(v));
            }
        }
    }

    std::vector<std::uint32_t> byte_counts(strip_count);
    for (std::uint32_t s = 0; s < strip_count; ++s) {
        const std::uint32_t rows = std::min<std::uint32_t>(rows_per_strip, g.height - s * rows_per_strip);
        byte_counts[s] = static_cast<std::uint32_t>(rows * row_bytes);
    }

    const bool geographic = is_geographic(g.crs);
    std::vector<Entry> entries;
    entries.push_back(longs(kTagImageWidth, {static_cast<std::uint32_t>(g.width)}));
    entries.push_back(longs(kTagImageLength, {static_cast<std::uint32_t>(g.height)}));
    entries.push_back(shorts(kTagBitsPerSample, std::vector<std::uint16_t>(spp, bits)));
    entries.push_back(shorts(kTagCompression, {1}));
    entries.push_back(shorts(kTagPhotometric, {1}));
    entries.push_back(longs(kTagStripOffsets, std::vector<std::uint32_t>(strip_count, 0)));
    entries.push_back(shorts(kTagSamplesPerPixel, {static_cast<std::uint16_t>(spp)}));
    entries.push_back(longs(kTagRowsPerStrip, {rows_per_strip}));
    entries.push_back(longs(kTagStripByteCounts, byte_counts));
    entries.push_back(shorts(kTagPlanarConfig, {1}));
    if (spp == 3) entries.push_back(shorts(kTagExtraSamples, {0, 0}));
    entries.push_back(shorts(kTagSampleFormat, std::vector<std::uint16_t>(spp, format)));
    entries.push_back(doubles(kTagModelPixelScale, {g.pixel_size_x, g.pixel_size_y, 0.0}));
    entries.push_back(doubles(kTagModelTiepoint, {0.0, 0.0, 0.0, g.origin_x, g.origin_y, 0.0}));
    entries.push_back(shorts(kTagGeoKeyDirectory,
                             {1, 1, 0, 3,                                            //
                              kKeyModelType, 0, 1, static_cast<std::uint16_t>(geographic ? 2 : 1),  //
                              kKeyRasterType, 0, 1, 1,                               //
                              static_cast<std::uint16_t>(geographic ? kKeyGeographicType : kKeyProjectedType), 0, 1,
                              static_cast<std::uint16_t>(g.crs)}));
    entries.push_back(ascii(kTagGdalNodata, format_nodata(raster.nodata)));

    // Layout: header | IFD | out-of-line values | pixel strips.
    const std::size_t ifd_offset = 8;
    const std::size_t ifd_size = 2 + entries.size() * 12 + 4;
    std::size_t data_offset = ifd_offset + ifd_size;
    std::vector<std::size_t> value_offsets(entries.size(), 0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].payload.size() > 4) {
            data_offset += data_offset & 1u;
            value_offsets[i] = data_offset;
            data_offset += entries[i].payload.size();
        }
    }
    data_offset += data_offset & 1u;
    const std::size_t pixel_offset = data_offset;

    // Now that the pixel offset is known, fill in the strip offsets.
    for (auto& e : entries) {
        if (e.tag != kTagStripOffsets) continue;
        ByteWriter w;
        std::size_t off = pixel_offset;
        for (std::uint32_t s = 0; s < strip_count; ++s) {
            w.u32le(static_cast<std::uint32_t>(off));
            off += byte_counts[s];
        }
        e.payload = w.take();
    }
    if (pixel_offset + pixels.size() > 0xFFFFFFFFull) {
        throw Error(ErrorCode::unsupported_format, "raster too large for classic TIFF");
    }

    ByteWriter out;
    out.bytes(std::string_view("II*\0", 4));
    out.u32le(static_cast<std::uint32_t>(ifd_offset));
    out.u16le(static_cast<std::uint16_t>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        out.u16le(e.tag);
        out.u16le(e.type);
        out.u32le(e.count);
        if (e.payload.size() > 4) {
            out.u32le(static_cast<std::uint32_t>(value_offsets[i]));
        } else {
            out.bytes(e.payload);
            out.zeros(4 - e.payload.size());
        }
    }
    out.u32le(0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].payload.size() <= 4) continue;
        out.zeros(value_offsets[i] - out.size());
        out.bytes(entries[i].payload);
    }
    out.zeros(pixel_offset - out.size());
    out.bytes(pixels.data());
    return out.take();
}

namespace {

struct Field {
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::size_t value_at = 0;  // absolute offset of the first value
};

std::size_t type_size(std::uint16_t type) {
    switch (type) {
        case 1: case 2: case 6: case 7: return 1;
        case 3: case 8: return 2;
        case 4: case 9: case 11: return 4;
        case 5: case 10: case 12: return 8;
        default: return 0;
    }
}

class IfdView {
public:
    explicit IfdView(const ByteReader& r) : r_(r) {
        if (r.size() < 8) throw Error(ErrorCode::io_error, "file too short to be a TIFF");
        const auto order = r.str(0, 2);
        if (order == "MM") throw Error(ErrorCode::unsupported_format, "big-endian TIFF is not supported");
        if (order != "II") throw Error(ErrorCode::unsupported_format, "not a TIFF file");
        if (r.u16le(2) == 43) throw Error(ErrorCode::unsupported_format, "BigTIFF is not supported");
        if (r.u16le(2) != 42) throw Error(ErrorCode::unsupported_format, "bad TIFF magic number");
        const std::size_t ifd = r.u32le(4);
        const std::size_t n = r.u16le(ifd);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t at = ifd + 2 + i * 12;
            Field f;
            const auto tag = r.u16le(at);
            f.type = r.u16le(at + 2);
            f.count = r.u32le(at + 4);
            const std::size_t bytes = type_size(f.type) * f.count;
            if (type_size(f.type) == 0) {
                throw Error(ErrorCode::unsupported_format, fmt::format("tag {} has unknown field type {}", tag, f.type));
            }
            f.value_at = bytes <= 4 ? at + 8 : r.u32le(at + 8);
            fields_[tag] = f;
        }
        if (r.u32le(ifd + 2 + n * 12) != 0) {
            throw Error(ErrorCode::unsupported_format, "multi-image TIFF is not supported");
        }
    }

    bool has(std::uint16_t tag) const { return fields_.contains(tag); }
    const std::map<std::uint16_t, Field>& fields() const { return fields_; }

    std::vector<std::uint64_t> integers(std::uint16_t tag) const {
        const auto& f = require(tag);
        std::vector<std::uint64_t> out(f.count);
        for (std::uint32_t i = 0; i < f.count; ++i) {
            switch (f.type) {
                case 1: out[i] = r_.u8(f.value_at + i); break;
                case 3: out[i] = r_.u16le(f.value_at + 2 * i); break;
                case 4: out[i] = r_.u32le(f.value_at + 4 * i); break;
                default:
                    throw Error(ErrorCode::unsupported_format, fmt::format("tag {} is not an integer field", tag));
            }
        }
        return out;
    }
    std::uint64_t integer(std::uint16_t tag) const {
        auto v = integers(tag);
        if (v.size() != 1) throw Error(ErrorCode::unsupported_format, fmt::format("tag {} must be scalar", tag));
        return v[0];
    }
    std::vector<double> reals(std::uint16_t tag) const {
        const auto& f = require(tag);
        if (f.type != kTypeDouble) throw Error(ErrorCode::unsupported_format, fmt::format("tag {} must be DOUBLE", tag));
        std::vector<double> out(f.count);
        for (std::uint32_t i = 0; i < f.count; ++i) out[i] = r_.f64le(f.value_at + 8 * i);
        return out;
    }
    std::string text(std::uint16_t tag) const {
        const auto& f = require(tag);
        if (f.type != kTypeAscii) throw Error(ErrorCode::unsupported_format, fmt::format("tag {} must be ASCII", tag));
        std::string s(r_.str(f.value_at, f.count));
        while (!s.empty() && s.back() == '\0') s.pop_back();
        return s;
    }

private:
    const Field& require(std::uint16_t tag) const {
        auto it = fields_.find(tag);
        if (it == fields_.end()) throw Error(ErrorCode::unsupported_format, fmt::format("required tag {} missing", tag));
        return it->second;
    }

    const ByteReader& r_;
    std::map<std::uint16_t, Field> fields_;
};

bool all_equal(const std::vector<std::uint64_t>& v, std::uint64_t x) {
    return std::all_of(v.begin(), v.end(), [x](auto e) { return e == x; });
}

float parse_nodata(const std::string& s) {
    if (s == "nan" || s == "NaN" || s == "NAN") return std::nanf("");
    float v = 0.0f;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::unsupported_format, fmt::format("unparseable GDAL_NODATA value '{}'", s));
    }
    return v;
}

}  // namespace

MultiBandRaster decode_geotiff(std::span<const std::uint8_t> bytes) {
    const ByteReader r(bytes, ErrorCode::io_error, "GeoTIFF");
    const IfdView ifd(r);

    static const std::uint16_t kAllowed[] = {
        kTagImageWidth,     kTagImageLength,     kTagBitsPerSample,  kTagCompression,      kTagPhotometric,
        kTagStripOffsets,   kTagSamplesPerPixel, kTagRowsPerStrip,   kTagStripByteCounts,  kTagPlanarConfig,
        kTagExtraSamples,   kTagSampleFormat,    kTagModelPixelScale, kTagModelTiepoint,   kTagGeoKeyDirectory,
        kTagGeoDoubleParams, kTagGeoAsciiParams, kTagGdalNodata,
    };
    for (const auto& [tag, _] : ifd.fields()) {
        if (std::find(std::begin(kAllowed), std::end(kAllowed), tag) == std::end(kAllowed)) {
            throw Error(ErrorCode::unsupported_format, fmt::format("tag {} is outside the supported GeoTIFF subset", tag));
        }
    }

    const std::size_t spp = ifd.has(kTagSamplesPerPixel) ? ifd.integer(kTagSamplesPerPixel) : 1;
    if (spp != 1 && spp != 3) {
        throw Error(ErrorCode::unsupported_format, fmt::format("{} samples per pixel", spp));
    }
    if (ifd.has(kTagCompression) && ifd.integer(kTagCompression) != 1) {
        throw Error(ErrorCode::unsupported_format, "compressed TIFF is not supported");
    }
    if (ifd.integer(kTagPhotometric) != 1) {
        throw Error(ErrorCode::unsupported_format, "PhotometricInterpretation must be 1");
    }
    if (ifd.has(kTagPlanarConfig) && ifd.integer(kTagPlanarConfig) != 1) {
        throw Error(ErrorCode::unsupported_format, "only chunky planar configuration is supported");
    }
    const auto bits = ifd.integers(kTagBitsPerSample);
    const auto formats = ifd.has(kTagSampleFormat) ? ifd.integers(kTagSampleFormat) : std::vector<std::uint64_t>(spp, 1);
    if (bits.size() != spp || formats.size() != spp) {
        throw Error(ErrorCode::unsupported_format, "BitsPerSample/SampleFormat count does not match samples per pixel");
    }
    SampleType type;
    if (all_equal(bits, 32) && all_equal(formats, 3)) {
        type = SampleType::float32;
    } else if (all_equal(bits, 16) && all_equal(formats, 1)) {
        type = SampleType::uint16;
    } else {
        throw Error(ErrorCode::unsupported_format, "unsupported sample format (need float32 or uint16)");
    }

    if (!ifd.has(kTagModelPixelScale) || !ifd.has(kTagModelTiepoint) || !ifd.has(kTagGeoKeyDirectory)) {
        throw Error(ErrorCode::missing_georeferencing, "missing georeferencing (pixel scale, tiepoint or geokeys)");
    }

    GridGeometry g;
    g.width = static_cast<int>(ifd.integer(kTagImageWidth));
    g.height = static_cast<int>(ifd.integer(kTagImageLength));
    const auto scale = ifd.reals(kTagModelPixelScale);
    const auto tie = ifd.reals(kTagModelTiepoint);
    if (scale.size() < 2 || tie.size() != 6) {
        throw Error(ErrorCode::unsupported_format, "malformed pixel scale or tiepoint (rotation/multiple tiepoints unsupported)");
    }
    g.pixel_size_x = scale[0];
    g.pixel_size_y = scale[1];
    g.origin_x = tie[3] - tie[0] * g.pixel_size_x;
    g.origin_y = tie[4] + tie[1] * g.pixel_size_y;
    if (!(g.pixel_size_x > 0) || !(g.pixel_size_y > 0) || g.width <= 0 || g.height <= 0) {
        throw Error(ErrorCode::unsupported_format, "non-positive dimensions or pixel scale");
    }

    const auto keys = ifd.integers(kTagGeoKeyDirectory);
    if (keys.size() < 4 || keys.size() < 4 + 4 * keys[3]) {
        throw Error(ErrorCode::unsupported_format, "malformed GeoKeyDirectory");
    }
    for (std::size_t k = 0; k < keys[3]; ++k) {
        const auto id = keys[4 + 4 * k];
        const auto location = keys[4 + 4 * k + 1];
        const auto value = keys[4 + 4 * k + 3];
        if ((id == kKeyGeographicType || id == kKeyProjectedType) && location == 0) {
            g.crs = static_cast<int>(value);
        }
        if (id == kKeyRasterType && location == 0 && value != 1) {
            throw Error(ErrorCode::unsupported_format, "only PixelIsArea rasters are supported");
        }
    }
    if (g.crs == 0) throw Error(ErrorCode::missing_georeferencing, "GeoKeyDirectory carries no EPSG code");

    MultiBandRaster out;
    out.geometry = g;
    out.nodata = ifd.has(kTagGdalNodata) ? parse_nodata(ifd.text(kTagGdalNodata)) : kNodata;
    out.bands.assign(spp, std::vector<float>(g.size()));

    const auto offsets = ifd.integers(kTagStripOffsets);
    const auto counts = ifd.integers(kTagStripByteCounts);
    const std::size_t rows_per_strip = ifd.has(kTagRowsPerStrip) ? ifd.integer(kTagRowsPerStrip) : g.height;
    const std::size_t sample_bytes = type == SampleType::float32 ? 4 : 2;
    const std::size_t row_bytes = static_cast<std::size_t>(g.width) * spp * sample_bytes;
    const std::size_t strips = (g.height + rows_per_strip - 1) / std::max<std::size_t>(rows_per_strip, 1);
    if (rows_per_strip == 0 || offsets.size() != strips || counts.size() != strips) {
        throw Error(ErrorCode::unsupported_format, "strip layout does not match image size");
    }
    std::size_t pixel = 0;
    for (std::size_t s = 0; s < strips; ++s) {
        const std::size_t rows = std::min(rows_per_strip, g.height - s * rows_per_strip);
        if (counts[s] != rows * row_bytes) throw Error(ErrorCode::unsupported_format, "unexpected strip byte count");
        std::size_t at = offsets[s];
        for (std::size_t i = 0; i < rows * g.width; ++i, ++pixel) {
            for (std::size_t b = 0; b < spp; ++b) {
                out.bands[b][pixel] = type == SampleType::float32 ? r.f32le(at) : static_cast<float>(r.u16le(at));
                at += sample_bytes;
            }
        }
    }
    return out;
}

MultiBandRaster read_geotiff_bands(const std::filesystem::path& path) {
    return decode_geotiff(read_file_bytes(path));
}

Raster read_geotiff(const std::filesystem::path& path) {
    auto mb = read_geotiff_bands(path);
    if (mb.band_count() != 1) {
        throw Error(ErrorCode::multi_band, fmt::format("'{}' has {} bands; expected one", path.string(), mb.band_count()));
    }
    return mb.band(0);
}

MultiBandRaster as_multiband(const Raster& raster) {
    MultiBandRaster mb;
    mb.geometry = raster.geometry;
    mb.nodata = raster.nodata;
    mb.bands.push_back(raster.values);
    return mb;
}

void write_geotiff(const Raster& raster, const std::filesystem::path& path, SampleType type) {
    if (raster.values.size() != raster.geometry.size()) {
        throw Error(ErrorCode::invalid_argument, "raster value count does not match its grid");
    }
    write_file_atomic(path, encode_geotiff(as_multiband(raster), type));
}

void write_geotiff(const MultiBandRaster& raster, const std::filesystem::path& path) {
    write_file_atomic(path, encode_geotiff(raster, SampleType::float32));
}

}  // namespace fieldbabel
