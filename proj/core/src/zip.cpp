#include "fieldbabel/zip.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>
#include <zlib.h>

#include "fieldbabel/bytes.hpp"
#include "fieldbabel/error.hpp"

namespace fieldbabel {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kVersion = 20;
constexpr std::uint16_t kUtf8Flag = 0x0800;
constexpr std::uint16_t kDosTime = 0;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01

std::uint32_t crc_of(const std::vector<std::uint8_t>& data) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // crc32 takes uInt lengths; feed large buffers in pieces.
    std::size_t off = 0;
    while (off < data.size()) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(data.size() - off, 1u << 30));
        crc = crc32(crc, data.data() + off, n);
        off += n;
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> write_zip(std::vector<ZipEntry> entries) {
    std::sort(entries.begin(), entries.end(), [](const ZipEntry& a, const ZipEntry& b) { return a.name < b.name; });
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].name == entries[i - 1].name) {
            throw Error(ErrorCode::invalid_argument, fmt::format("duplicate zip entry {}", entries[i].name));
        }
    }
    if (entries.size() > 0xFFFF) throw Error(ErrorCode::invalid_argument, "too many zip entries");

    ByteWriter out;
    std::vector<std::uint32_t> offsets, crcs;
    constexpr auto limit = std::numeric_limits<std::uint32_t>::max();
    for (const auto& e : entries) {
        if (e.name.empty() || e.name.size() > 0xFFFF) throw Error(ErrorCode::invalid_argument, "bad zip entry name");
        if (out.size() > limit || e.data.size() > limit) throw Error(ErrorCode::invalid_argument, "archive exceeds 4 GiB");
        offsets.push_back(static_cast<std::uint32_t>(out.size()));
        crcs.push_back(crc_of(e.data));
        out.u32le(kLocalSig);
        out.u16le(kVersion);
        out.u16le(kUtf8Flag);
        out.u16le(0);  // stored
        out.u16le(kDosTime);
        out.u16le(kDosDate);
        out.u32le(crcs.back());
        out.u32le(static_cast<std::uint32_t>(e.data.size()));
        out.u32le(static_cast<std::uint32_t>(e.data.size()));
        out.u16le(static_cast<std::uint16_t>(e.name.size()));
        out.u16le(0);
        out.bytes(std::span(reinterpret_cast<const std::uint8_t*>(e.name.data()), e.name.size()));
        out.bytes(e.data);
    }
    if (out.size() > limit) throw Error(ErrorCode::invalid_argument, "archive exceeds 4 GiB");
    const auto cd_offset = static_cast<std::uint32_t>(out.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        out.u32le(kCentralSig);
        out.u16le(kVersion);
        out.u16le(kVersion);
        out.u16le(kUtf8Flag);
        out.u16le(0);
        out.u16le(kDosTime);
        out.u16le(kDosDate);
        out.u32le(crcs[i]);
        out.u32le(static_cast<std::uint32_t>(e.data.size()));
        out.u32le(static_cast<std::uint32_t>(e.data.size()));
        out.u16le(static_cast<std::uint16_t>(e.name.size()));
        out.u16le(0);  // extra
        out.u16le(0);  // comment
        out.u16le(0);  // disk
        out.u16le(0);  // internal attributes
        out.u32le(0);  // external attributes
        out.u32le(offsets[i]);
        out.bytes(std::span(reinterpret_cast<const std::uint8_t*>(e.name.data()), e.name.size()));
    }
    const auto cd_size = static_cast<std::uint32_t>(out.size() - cd_offset);
    out.u32le(kEndSig);
    out.u16le(0);
    out.u16le(0);
    out.u16le(static_cast<std::uint16_t>(entries.size()));
    out.u16le(static_cast<std::uint16_t>(entries.size()));
    out.u32le(cd_size);
    out.u32le(cd_offset);
    out.u16le(0);
    return out.take();
}

std::vector<ZipEntry> read_zip(std::span<const std::uint8_t> bytes) {
    constexpr std::size_t kEndSize = 22;
    const ByteReader r(bytes, ErrorCode::unsupported_format, "zip archive");
    if (bytes.size() < kEndSize) throw Error(ErrorCode::unsupported_format, "not a zip archive");
    // Find the end record; archives written here carry no comment.
    std::size_t end = bytes.size() - kEndSize;
    while (r.u32le(end) != kEndSig) {
        if (end == 0 || bytes.size() - end > kEndSize + 0xFFFF) {
            throw Error(ErrorCode::unsupported_format, "zip end record not found");
        }
        --end;
    }
    if (r.u16le(end + 4) != 0 || r.u16le(end + 6) != 0) throw Error(ErrorCode::unsupported_format, "multi-disk zip");
    const std::uint16_t count = r.u16le(end + 10);
    std::size_t at = r.u32le(end + 16);

    std::vector<ZipEntry> out;
    for (std::uint16_t i = 0; i < count; ++i) {
        if (r.u32le(at) != kCentralSig) throw Error(ErrorCode::unsupported_format, "bad central directory entry");
        const std::uint16_t flags = r.u16le(at + 8);
        const std::uint16_t method = r.u16le(at + 10);
        const std::uint32_t crc = r.u32le(at + 16);
        const std::uint32_t csize = r.u32le(at + 20);
        const std::uint32_t usize = r.u32le(at + 24);
        const std::uint16_t name_len = r.u16le(at + 28);
        const std::uint16_t extra_len = r.u16le(at + 30);
        const std::uint16_t comment_len = r.u16le(at + 32);
        const std::uint32_t local = r.u32le(at + 42);
        ZipEntry e;
        e.name = std::string(r.str(at + 46, name_len));
        at += 46 + static_cast<std::size_t>(name_len) + extra_len + comment_len;
        if (method != 0 || (flags & 0x0001) || csize != usize) {
            throw Error(ErrorCode::unsupported_format, fmt::format("zip entry {} is compressed or encrypted", e.name));
        }
        if (r.u32le(local) != kLocalSig) throw Error(ErrorCode::unsupported_format, "bad local header");
        const std::size_t data_at = local + 30 + static_cast<std::size_t>(r.u16le(local + 26)) + r.u16le(local + 28);
        const auto data = r.span(data_at, usize);
        e.data.assign(data.begin(), data.end());
        if (crc_of(e.data) != crc) throw Error(ErrorCode::unsupported_format, fmt::format("CRC mismatch in {}", e.name));
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace fieldbabel
