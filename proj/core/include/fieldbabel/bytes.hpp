#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fieldbabel/error.hpp"

namespace fieldbabel {

/// Append-only byte buffer with explicit-endian primitive writers.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16le(std::uint16_t v) { put_le(v); }
    void u32le(std::uint32_t v) { put_le(v); }
    void i32le(std::int32_t v) { put_le(static_cast<std::uint32_t>(v)); }
    void i32be(std::int32_t v) { put_be(static_cast<std::uint32_t>(v)); }
    void f64le(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
    void f32le(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    void bytes(std::span<const std::uint8_t> s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    void zeros(std::size_t n) { buf_.insert(buf_.end(), n, 0); }

    void patch_u32le(std::size_t at, std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
    }
    void patch_i32be(std::size_t at, std::int32_t v) {
        const auto u = static_cast<std::uint32_t>(v);
        for (int i = 0; i < 4; ++i) buf_[at + i] = static_cast<std::uint8_t>(u >> (8 * (3 - i)));
    }

    std::size_t size() const { return buf_.size(); }
    const std::vector<std::uint8_t>& data() const { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    template <typename U>
    void put_le(U v) {
        for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    template <typename U>
    void put_be(U v) {
        for (std::size_t i = sizeof(U); i-- > 0;) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader over a byte span. Out-of-range reads throw Error
/// with the code supplied at construction.
class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> data, ErrorCode on_truncation, std::string what)
        : data_(data), code_(on_truncation), what_(std::move(what)) {}

    std::uint8_t u8(std::size_t at) const { return get(at, 1)[0]; }
    std::uint16_t u16le(std::size_t at) const { return le<std::uint16_t>(at); }
    std::uint32_t u32le(std::size_t at) const { return le<std::uint32_t>(at); }
    std::int32_t i32le(std::size_t at) const { return static_cast<std::int32_t>(le<std::uint32_t>(at)); }
    std::int32_t i32be(std::size_t at) const {
        const auto* p = get(at, 4);
        return static_cast<std::int32_t>((std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                                         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]});
    }
    double f64le(std::size_t at) const { return std::bit_cast<double>(le<std::uint64_t>(at)); }
    float f32le(std::size_t at) const { return std::bit_cast<float>(le<std::uint32_t>(at)); }
    std::string_view str(std::size_t at, std::size_t n) const {
        return {reinterpret_cast<const char*>(get(at, n)), n};
    }
    std::span<const std::uint8_t> span(std::size_t at, std::size_t n) const { return {get(at, n), n}; }

    std::size_t size() const { return data_.size(); }

private:
    const std::uint8_t* get(std::size_t at, std::size_t n) const {
        if (at > data_.size() || n > data_.size() - at) {
            throw Error(code_, what_ + ": truncated data");
        }
        return data_.data() + at;
    }
    template <typename U>
    U le(std::size_t at) const {
        const auto* p = get(at, sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(U{p[i]} << (8 * i));
        return v;
    }

    std::span<const std::uint8_t> data_;
    ErrorCode code_;
    std::string what_;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// Writes via a sibling temporary file and rename, fsyncing the data first.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace fieldbabel
