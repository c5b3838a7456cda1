#include "spqa/binary_io.hpp"

#include <fstream>
#include <sstream>

#include "spqa/error.hpp"

namespace spqa::io {

std::string_view ByteReader::bytes(std::size_t n) {
    if (n > remaining()) {
        fail("truncated: needed " + std::to_string(n) + " bytes at offset " + std::to_string(pos_) +
             ", " + std::to_string(remaining()) + " left");
    }
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
}

std::uint64_t ByteReader::varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
        auto byte = static_cast<unsigned char>(bytes(1)[0]);
        v |= static_cast<std::uint64_t>(byte & 0x7F) << shift;
        if ((byte & 0x80) == 0) return v;
    }
    fail("varint longer than 10 bytes");
}

std::string ByteReader::varint_string() {
    auto n = varint();
    return std::string(bytes(n));
}

std::string ByteReader::u32_string() {
    auto n = u32();
    return std::string(bytes(n));
}

void ByteReader::expect_header(std::string_view magic, std::uint32_t version) {
    if (remaining() < magic.size() || bytes(magic.size()) != magic) {
        fail("bad magic, expected \"" + std::string(magic) + "\"");
    }
    auto got = u32();
    if (got != version) {
        fail("unsupported format version " + std::to_string(got) + " (expected " +
             std::to_string(version) + ")");
    }
}

void ByteReader::fail(const std::string& msg) const {
    throw DataError(what_ + ": " + msg);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view data) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw DataError("write failed for " + path.string());
}

} // namespace spqa::io
