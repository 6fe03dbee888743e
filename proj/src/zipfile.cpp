#include "shotit/zipfile.hpp"

#include <zlib.h>

#include <cstring>

#include "shotit/errors.hpp"

namespace shotit {

namespace {

constexpr uint32_t kLocalSig = 0x04034b50;
constexpr uint32_t kCentralSig = 0x02014b50;
constexpr uint32_t kEndSig = 0x06054b50;

void put16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(static_cast<uint8_t>(v));
    b.push_back(static_cast<uint8_t>(v >> 8));
}

void put32(std::vector<uint8_t>& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint16_t get16(std::span<const uint8_t> b, size_t pos) {
    if (pos + 2 > b.size()) throw ParseError("zip: truncated");
    return static_cast<uint16_t>(b[pos] | (b[pos + 1] << 8));
}

uint32_t get32(std::span<const uint8_t> b, size_t pos) {
    if (pos + 4 > b.size()) throw ParseError("zip: truncated");
    return static_cast<uint32_t>(b[pos]) | (static_cast<uint32_t>(b[pos + 1]) << 8) |
           (static_cast<uint32_t>(b[pos + 2]) << 16) |
           (static_cast<uint32_t>(b[pos + 3]) << 24);
}

std::vector<uint8_t> deflate_raw(std::span<const uint8_t> data) {
    z_stream zs{};
    if (deflateInit2(&zs, 6, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw IoError("zip: deflateInit failed");
    std::vector<uint8_t> out(deflateBound(&zs, static_cast<uLong>(data.size())));
    zs.next_in = const_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw IoError("zip: deflate failed");
    out.resize(zs.total_out);
    return out;
}

std::vector<uint8_t> inflate_raw(std::span<const uint8_t> data, size_t expected) {
    std::vector<uint8_t> out(expected);
    z_stream zs{};
    if (inflateInit2(&zs, -15) != Z_OK) throw IoError("zip: inflateInit failed");
    zs.next_in = const_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.total_out != expected)
        throw ParseError("zip: inflate failed");
    return out;
}

} // namespace

std::vector<uint8_t> zip_pack(const std::vector<ZipEntrySpec>& entries) {
    if (entries.size() > 0xffff) throw InvalidInput("zip: too many entries");
    std::vector<uint8_t> out;
    struct Central {
        std::string name;
        uint16_t method;
        uint32_t crc, csize, usize, offset;
    };
    std::vector<Central> centrals;
    centrals.reserve(entries.size());

    for (const auto& e : entries) {
        uint32_t crc = static_cast<uint32_t>(
            crc32(0, e.data.data(), static_cast<uInt>(e.data.size())));
        std::vector<uint8_t> packed;
        uint16_t method = 0;
        if (e.compress && !e.data.empty()) {
            packed = deflate_raw(e.data);
            if (packed.size() < e.data.size()) method = 8;
        }
        const std::vector<uint8_t>& payload = method == 8 ? packed : e.data;

        Central c{e.name, method, crc, static_cast<uint32_t>(payload.size()),
                  static_cast<uint32_t>(e.data.size()), static_cast<uint32_t>(out.size())};
        centrals.push_back(c);

        put32(out, kLocalSig);
        put16(out, 20);     // version needed
        put16(out, 0);      // flags
        put16(out, method); // compression
        put16(out, 0);      // mod time
        put16(out, 0);      // mod date
        put32(out, crc);
        put32(out, c.csize);
        put32(out, c.usize);
        put16(out, static_cast<uint16_t>(e.name.size()));
        put16(out, 0); // extra len
        out.insert(out.end(), e.name.begin(), e.name.end());
        out.insert(out.end(), payload.begin(), payload.end());
    }

    uint32_t cd_offset = static_cast<uint32_t>(out.size());
    for (const auto& c : centrals) {
        put32(out, kCentralSig);
        put16(out, 20); // version made by
        put16(out, 20); // version needed
        put16(out, 0);
        put16(out, c.method);
        put16(out, 0);
        put16(out, 0);
        put32(out, c.crc);
        put32(out, c.csize);
        put32(out, c.usize);
        put16(out, static_cast<uint16_t>(c.name.size()));
        put16(out, 0); // extra
        put16(out, 0); // comment
        put16(out, 0); // disk
        put16(out, 0); // internal attrs
        put32(out, 0); // external attrs
        put32(out, c.offset);
        out.insert(out.end(), c.name.begin(), c.name.end());
    }
    uint32_t cd_size = static_cast<uint32_t>(out.size()) - cd_offset;

    put32(out, kEndSig);
    put16(out, 0);
    put16(out, 0);
    put16(out, static_cast<uint16_t>(centrals.size()));
    put16(out, static_cast<uint16_t>(centrals.size()));
    put32(out, cd_size);
    put32(out, cd_offset);
    put16(out, 0);
    return out;
}

ZipArchive::ZipArchive(std::vector<uint8_t> bytes) : bytes_(std::move(bytes)) {
    if (bytes_.size() < 22) throw ParseError("zip: too small");
    // End-of-central-directory record: scan backward past any comment.
    size_t scan_limit = bytes_.size() >= 22 + 0xffff ? bytes_.size() - 22 - 0xffff : 0;
    size_t eocd = std::string::npos;
    for (size_t pos = bytes_.size() - 22; ; --pos) {
        if (get32(bytes_, pos) == kEndSig) {
            eocd = pos;
            break;
        }
        if (pos == scan_limit) break;
    }
    if (eocd == std::string::npos) throw ParseError("zip: end record not found");

    uint16_t count = get16(bytes_, eocd + 10);
    uint32_t cd_size = get32(bytes_, eocd + 12);
    uint32_t cd_offset = get32(bytes_, eocd + 16);
    if (static_cast<size_t>(cd_offset) + cd_size > bytes_.size())
        throw ParseError("zip: central directory out of range");

    size_t pos = cd_offset;
    for (uint16_t i = 0; i < count; ++i) {
        if (get32(bytes_, pos) != kCentralSig) throw ParseError("zip: bad central entry");
        Entry e;
        e.method = get16(bytes_, pos + 10);
        e.crc = get32(bytes_, pos + 16);
        e.comp_size = get32(bytes_, pos + 20);
        e.uncomp_size = get32(bytes_, pos + 24);
        uint16_t name_len = get16(bytes_, pos + 28);
        uint16_t extra_len = get16(bytes_, pos + 30);
        uint16_t comment_len = get16(bytes_, pos + 32);
        e.local_offset = get32(bytes_, pos + 42);
        if (pos + 46 + name_len > bytes_.size()) throw ParseError("zip: truncated name");
        e.name.assign(bytes_.begin() + pos + 46, bytes_.begin() + pos + 46 + name_len);
        entries_.push_back(std::move(e));
        pos += 46u + name_len + extra_len + comment_len;
    }
}

std::vector<std::string> ZipArchive::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
}

bool ZipArchive::has(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

const ZipArchive::Entry& ZipArchive::find(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e;
    throw NotFoundError("zip: no entry named " + name);
}

std::vector<uint8_t> ZipArchive::read(const std::string& name) const {
    const Entry& e = find(name);
    size_t pos = e.local_offset;
    if (get32(bytes_, pos) != kLocalSig) throw ParseError("zip: bad local header");
    uint16_t name_len = get16(bytes_, pos + 26);
    uint16_t extra_len = get16(bytes_, pos + 28);
    size_t data_pos = pos + 30 + name_len + extra_len;
    if (data_pos + e.comp_size > bytes_.size()) throw ParseError("zip: truncated data");

    std::span<const uint8_t> payload(bytes_.data() + data_pos, e.comp_size);
    std::vector<uint8_t> out;
    if (e.method == 0) {
        if (e.comp_size != e.uncomp_size) throw ParseError("zip: stored size mismatch");
        out.assign(payload.begin(), payload.end());
    } else if (e.method == 8) {
        out = inflate_raw(payload, e.uncomp_size);
    } else {
        throw ParseError("zip: unsupported compression method " +
                         std::to_string(e.method));
    }
    uint32_t crc = static_cast<uint32_t>(
        crc32(0, out.data(), static_cast<uInt>(out.size())));
    if (crc != e.crc) throw CorruptError("zip: crc mismatch for " + name);
    return out;
}

} // namespace shotit
