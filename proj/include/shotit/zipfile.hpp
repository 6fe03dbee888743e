#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace shotit {

// Minimal ZIP container support: store/deflate entries, central-directory
// random access, CRC validation. Enough for frame bundles and clip
// downloads; no zip64, no encryption.

struct ZipEntrySpec {
    std::string name;
    std::vector<uint8_t> data;
    bool compress = true;
};

std::vector<uint8_t> zip_pack(const std::vector<ZipEntrySpec>& entries);

class ZipArchive {
public:
    explicit ZipArchive(std::vector<uint8_t> bytes); // throws ParseError
    std::vector<std::string> names() const;          // in directory order
    bool has(const std::string& name) const;
    std::vector<uint8_t> read(const std::string& name) const;
    size_t entry_count() const { return entries_.size(); }

private:
    struct Entry {
        std::string name;
        uint16_t method = 0;
        uint32_t crc = 0;
        uint32_t comp_size = 0;
        uint32_t uncomp_size = 0;
        uint32_t local_offset = 0;
    };
    const Entry& find(const std::string& name) const;
    std::vector<uint8_t> bytes_;
    std::vector<Entry> entries_;
};

} // namespace shotit
