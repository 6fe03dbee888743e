#include "shotit/catalog.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <chrono>
#include <fstream>
#include <mutex>

#include <json.hpp>

#include "shotit/errors.hpp"

namespace shotit {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(MediaState s) {
    switch (s) {
        case MediaState::Uploaded: return "UPLOADED";
        case MediaState::Hashing: return "HASHING";
        case MediaState::Hashed: return "HASHED";
        case MediaState::Loading: return "LOADING";
        case MediaState::Loaded: return "LOADED";
    }
    return "?";
}

std::optional<MediaState> media_state_from_string(std::string_view s) {
    if (s == "UPLOADED") return MediaState::Uploaded;
    if (s == "HASHING") return MediaState::Hashing;
    if (s == "HASHED") return MediaState::Hashed;
    if (s == "LOADING") return MediaState::Loading;
    if (s == "LOADED") return MediaState::Loaded;
    return std::nullopt;
}

std::optional<MediaState> next_state(MediaState s) {
    switch (s) {
        case MediaState::Uploaded: return MediaState::Hashing;
        case MediaState::Hashing: return MediaState::Hashed;
        case MediaState::Hashed: return MediaState::Loading;
        case MediaState::Loading: return MediaState::Loaded;
        case MediaState::Loaded: return std::nullopt;
    }
    return std::nullopt;
}

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

uint32_t crc_of(const std::string& s) {
    return static_cast<uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

// Applies one validated journal entry to the record map. Returns false if
// the entry is inconsistent with the current state (treated as journal
// corruption by the replay path; never happens for freshly written ones).
bool apply_entry(std::map<uint64_t, MediaRecord>& records,
                 std::map<std::string, uint64_t, std::less<>>& by_store_key,
                 uint64_t media_id, const std::string& field,
                 const ordered_json& value) {
    if (field == "create") {
        if (!value.is_object() || !value.contains("source_path") ||
            !value.contains("store_key"))
            return false;
        std::string key = value["store_key"].get<std::string>();
        if (records.count(media_id) || by_store_key.count(key)) return false;
        MediaRecord r;
        r.media_id = media_id;
        r.source_path = value["source_path"].get<std::string>();
        r.store_key = key;
        r.state = MediaState::Uploaded;
        r.updated_at = now_seconds();
        records.emplace(media_id, std::move(r));
        by_store_key.emplace(std::move(key), media_id);
        return true;
    }
    auto it = records.find(media_id);
    if (it == records.end()) return false;
    if (field == "state") {
        if (!value.is_string()) return false;
        auto target = media_state_from_string(value.get<std::string>());
        if (!target || next_state(it->second.state) != *target) return false;
        it->second.state = *target;
        it->second.updated_at = now_seconds();
        return true;
    }
    if (field == "fps") {
        if (!value.is_number()) return false;
        it->second.fps = value.get<double>();
        it->second.updated_at = now_seconds();
        return true;
    }
    if (field == "duration") {
        if (!value.is_number()) return false;
        it->second.duration = value.get<double>();
        it->second.updated_at = now_seconds();
        return true;
    }
    return false;
}

} // namespace

Catalog::Catalog(std::filesystem::path journal_path, bool fsync_each)
    : journal_path_(std::move(journal_path)), fsync_each_(fsync_each) {
    if (journal_path_.has_parent_path())
        std::filesystem::create_directories(journal_path_.parent_path());
    replay();
    fd_ = ::open(journal_path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd_ < 0) throw IoError("cannot open journal " + journal_path_.string());
}

Catalog::~Catalog() {
    if (fd_ >= 0) ::close(fd_);
}

void Catalog::replay() {
    std::ifstream f(journal_path_, std::ios::binary);
    if (!f) return; // fresh catalog

    std::string line;
    uint64_t good_bytes = 0;
    while (std::getline(f, line)) {
        bool ok = false;
        try {
            ordered_json entry = ordered_json::parse(line);
            uint32_t crc = entry.at("crc").get<uint32_t>();
            ordered_json body = entry;
            body.erase("crc");
            if (crc_of(body.dump()) == crc) {
                uint64_t seq = entry.at("seq").get<uint64_t>();
                uint64_t media_id = entry.at("media_id").get<uint64_t>();
                std::string field = entry.at("field").get<std::string>();
                if (seq == next_seq_ &&
                    apply_entry(records_, by_store_key_, media_id, field,
                                entry.at("value"))) {
                    next_seq_ = seq + 1;
                    next_id_ = std::max(next_id_, media_id + 1);
                    ok = true;
                }
            }
        } catch (const ordered_json::exception&) {
            ok = false;
        }
        if (!ok) break; // torn or corrupt tail: ignore the rest
        good_bytes += line.size() + 1;
    }
    f.close();

    // Drop the torn tail so future appends continue a clean journal.
    std::error_code ec;
    auto file_size = std::filesystem::file_size(journal_path_, ec);
    if (!ec && file_size > good_bytes)
        std::filesystem::resize_file(journal_path_, good_bytes);
}

void Catalog::append_and_apply(uint64_t media_id, const std::string& field,
                               const std::string& value_json) {
    ordered_json body;
    body["seq"] = next_seq_;
    body["media_id"] = media_id;
    body["field"] = field;
    body["value"] = ordered_json::parse(value_json);
    std::string canonical = body.dump();
    body["crc"] = crc_of(canonical);
    std::string line = body.dump();
    line.push_back('\n');

    ssize_t n = ::write(fd_, line.data(), line.size());
    if (n != static_cast<ssize_t>(line.size()))
        throw IoError("journal append failed");
    if (fsync_each_ && ::fdatasync(fd_) != 0)
        throw IoError("journal fsync failed");

    if (!apply_entry(records_, by_store_key_, media_id, field, body["value"]))
        throw Error("journal entry failed to apply after validation");
    ++next_seq_;
}

MediaRecord Catalog::create_media(std::string source_path, std::string store_key) {
    if (store_key.empty()) throw InvalidInput("store_key must not be empty");
    std::unique_lock lock(mu_);
    if (by_store_key_.count(store_key))
        throw ConflictError("store_key already cataloged: " + store_key);

    uint64_t id = next_id_++;
    ordered_json value;
    value["source_path"] = source_path;
    value["store_key"] = store_key;
    append_and_apply(id, "create", value.dump());
    return records_.at(id);
}

MediaRecord Catalog::transition(uint64_t media_id, MediaState new_state) {
    std::unique_lock lock(mu_);
    auto it = records_.find(media_id);
    if (it == records_.end())
        throw NotFoundError("media " + std::to_string(media_id) + " not found");
    if (next_state(it->second.state) != new_state)
        throw TransitionError(std::string("illegal transition ") +
                              std::string(to_string(it->second.state)) + " -> " +
                              std::string(to_string(new_state)));
    ordered_json value = std::string(to_string(new_state));
    append_and_apply(media_id, "state", value.dump());
    return it->second;
}

MediaRecord Catalog::set_media_info(uint64_t media_id, double fps, double duration) {
    std::unique_lock lock(mu_);
    auto it = records_.find(media_id);
    if (it == records_.end())
        throw NotFoundError("media " + std::to_string(media_id) + " not found");
    if (fps <= 0) throw InvalidInput("fps must be positive");
    if (duration < 0) throw InvalidInput("duration must be nonnegative");
    append_and_apply(media_id, "fps", ordered_json(fps).dump());
    append_and_apply(media_id, "duration", ordered_json(duration).dump());
    return it->second;
}

MediaRecord Catalog::get(uint64_t media_id) const {
    std::shared_lock lock(mu_);
    auto it = records_.find(media_id);
    if (it == records_.end())
        throw NotFoundError("media " + std::to_string(media_id) + " not found");
    return it->second;
}

std::optional<MediaRecord> Catalog::find_by_store_key(std::string_view key) const {
    std::shared_lock lock(mu_);
    auto it = by_store_key_.find(key);
    if (it == by_store_key_.end()) return std::nullopt;
    return records_.at(it->second);
}

std::vector<MediaRecord> Catalog::list_media(std::optional<MediaState> filter) const {
    std::shared_lock lock(mu_);
    std::vector<MediaRecord> out;
    for (const auto& [id, rec] : records_)
        if (!filter || rec.state == *filter) out.push_back(rec);
    return out;
}

size_t Catalog::count() const {
    std::shared_lock lock(mu_);
    return records_.size();
}

void Catalog::export_snapshot(const std::filesystem::path& path) const {
    ordered_json arr = ordered_json::array();
    {
        std::shared_lock lock(mu_);
        for (const auto& [id, rec] : records_) {
            ordered_json j;
            j["media_id"] = rec.media_id;
            j["source_path"] = rec.source_path;
            j["store_key"] = rec.store_key;
            j["fps"] = rec.fps;
            j["duration"] = rec.duration;
            j["state"] = std::string(to_string(rec.state));
            j["updated_at"] = rec.updated_at;
            arr.push_back(std::move(j));
        }
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open " + tmp.string());
        f << arr.dump(2) << "\n";
        if (!f.flush()) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace shotit
