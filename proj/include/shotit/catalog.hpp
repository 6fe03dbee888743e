#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace shotit {

// Ingestion lifecycle; transitions move only to the immediate successor.
enum class MediaState { Uploaded, Hashing, Hashed, Loading, Loaded };

std::string_view to_string(MediaState s);
std::optional<MediaState> media_state_from_string(std::string_view s);
std::optional<MediaState> next_state(MediaState s);

struct MediaRecord {
    uint64_t media_id = 0;
    std::string source_path;
    std::string store_key;
    double fps = 0.0;      // set at hashing
    double duration = 0.0; // seconds
    MediaState state = MediaState::Uploaded;
    double updated_at = 0.0; // unix seconds, informational
};

// Media catalog persisted as an append-only journal of newline-delimited
// JSON entries {seq, media_id, field, value, crc}. Every mutation is
// journaled before it is applied; recovery replays the journal and drops
// a torn tail. Single writer, concurrent readers.
class Catalog {
public:
    explicit Catalog(std::filesystem::path journal_path, bool fsync_each = true);
    ~Catalog();

    Catalog(const Catalog&) = delete;
    Catalog& operator=(const Catalog&) = delete;

    MediaRecord create_media(std::string source_path, std::string store_key);
    MediaRecord transition(uint64_t media_id, MediaState new_state);
    MediaRecord set_media_info(uint64_t media_id, double fps, double duration);

    MediaRecord get(uint64_t media_id) const;
    std::optional<MediaRecord> find_by_store_key(std::string_view key) const;
    std::vector<MediaRecord> list_media(std::optional<MediaState> filter = {}) const;
    size_t count() const;

    // JSON array of MediaRecords, written to a temp file then renamed.
    void export_snapshot(const std::filesystem::path& path) const;

    const std::filesystem::path& journal_path() const { return journal_path_; }

private:
    void replay();
    void append_and_apply(uint64_t media_id, const std::string& field,
                          const std::string& value_json);

    std::filesystem::path journal_path_;
    bool fsync_each_;
    int fd_ = -1;

    mutable std::shared_mutex mu_;
    std::map<uint64_t, MediaRecord> records_;
    std::map<std::string, uint64_t, std::less<>> by_store_key_;
    uint64_t next_seq_ = 1;
    uint64_t next_id_ = 1;
};

} // namespace shotit
