#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spqa::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written with native little-endian stores");

/// Append-only little-endian byte buffer.
class ByteWriter {
public:
    void bytes(std::string_view raw) { buf_.insert(buf_.end(), raw.begin(), raw.end()); }

    void u32(std::uint32_t v) { put(v); }
    void u64(std::uint64_t v) { put(v); }
    void f32(float v) { put(v); }
    void f64(double v) { put(v); }

    // unsigned LEB128
    void varint(std::uint64_t v) {
        while (v >= 0x80) {
            buf_.push_back(static_cast<char>((v & 0x7F) | 0x80));
            v >>= 7;
        }
        buf_.push_back(static_cast<char>(v));
    }

    void varint_string(std::string_view s) {
        varint(s.size());
        bytes(s);
    }

    void u32_string(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s);
    }

    const std::string& data() const noexcept { return buf_; }

private:
    template <typename T>
    void put(T v) {
        char raw[sizeof(T)];
        std::memcpy(raw, &v, sizeof(T));
        buf_.append(raw, sizeof(T));
    }

    std::string buf_;
};

/// Bounds-checked reader over a byte buffer. Every read past the end throws
/// DataError naming `what` (the file kind) so truncation is reported clearly.
class ByteReader {
public:
    ByteReader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

    std::string_view bytes(std::size_t n);
    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    float f32() { return get<float>(); }
    double f64() { return get<double>(); }
    std::uint64_t varint();
    std::string varint_string();
    std::string u32_string();

    bool at_end() const noexcept { return pos_ == data_.size(); }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }

    /// Checks a fixed magic tag and a format version; throws on mismatch.
    void expect_header(std::string_view magic, std::uint32_t version);
    [[noreturn]] void fail(const std::string& msg) const;

private:
    template <typename T>
    T get() {
        auto raw = bytes(sizeof(T));
        T v;
        std::memcpy(&v, raw.data(), sizeof(T));
        return v;
    }

    std::string_view data_;
    std::size_t pos_ = 0;
    std::string what_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view data);

} // namespace spqa::io
