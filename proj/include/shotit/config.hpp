#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace shotit {

// Key-value configuration. File keys are overridden by environment
// variables carrying a SHOTIT_ prefix (incoming_dir -> SHOTIT_INCOMING_DIR).
struct Config {
    std::string incoming_dir = "incoming";
    std::string store_backend = "local"; // local | http
    std::string store_path_or_endpoint = "store";
    std::string index_path = "data/index.snap";
    uint32_t nlist = 0;  // 0 = ceil(sqrt(n)) clamped to [16, 4096]
    uint32_t nprobe = 0; // 0 = max(8, nlist/16)
    double theta = 0.35;
    double clip_window_s = 5.0;
    std::string clipper_cmd;  // optional {store_path} {from} {to} template
    std::string media_base_url = "http://localhost:3311";
    std::string search_engine = "ivf"; // ivf | flat
    double poll_interval_s = 2.0;
    std::string decoder_cmd; // optional {input} {outdir} template

    static Config load(const std::optional<std::filesystem::path>& file,
                       bool apply_env = true);

    std::filesystem::path data_dir() const {
        std::filesystem::path idx(index_path);
        return idx.has_parent_path() ? idx.parent_path() : std::filesystem::path(".");
    }
    std::filesystem::path catalog_journal_path() const {
        return data_dir() / "catalog.journal";
    }
    std::filesystem::path hash_dir() const { return data_dir() / "hashes"; }
};

} // namespace shotit
