#include "shotit/pipeline.hpp"

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <unordered_map>

#include <json.hpp>

#include "shotit/errors.hpp"
#include "shotit/image_io.hpp"
#include "shotit/vectorize.hpp"

namespace shotit {

namespace fs = std::filesystem;

IncomingWatcher::IncomingWatcher(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    if (!fs::is_directory(dir_, ec) || ec)
        throw IoError("incoming directory unreadable: " + dir_.string());
}

std::vector<fs::path> IncomingWatcher::poll() {
    std::vector<fs::path> ready;
    std::map<fs::path, uintmax_t> current;
    for (const auto& entry : fs::recursive_directory_iterator(dir_)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().filename().string().starts_with(".")) continue;
        current[entry.path()] = entry.file_size();
    }
    for (const auto& [path, size] : current) {
        auto prev = last_size_.find(path);
        bool stable = prev != last_size_.end() && prev->second == size;
        if (stable && !emitted_[path]) {
            emitted_[path] = true;
            ready.push_back(path);
        }
    }
    // Forget files that disappeared so a re-drop is seen as new.
    for (auto it = emitted_.begin(); it != emitted_.end();) {
        if (!current.count(it->first)) it = emitted_.erase(it);
        else ++it;
    }
    last_size_ = std::move(current);
    return ready;
}

std::string frame_file_name(size_t index, const std::string& format) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06zu.", index);
    return buf + format;
}

BundleManifest parse_manifest(std::span<const uint8_t> json_bytes) {
    auto j = nlohmann::json::parse(json_bytes.begin(), json_bytes.end(), nullptr, false);
    if (j.is_discarded()) throw ParseError("manifest.json: invalid JSON");
    BundleManifest m;
    try {
        m.fps = j.at("fps").get<double>();
        m.width = j.at("width").get<int>();
        m.height = j.at("height").get<int>();
        m.frame_count = j.at("frame_count").get<size_t>();
        if (j.contains("format")) m.format = j["format"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("manifest.json: ") + e.what());
    }
    if (m.fps <= 0) throw ParseError("manifest.json: fps must be positive");
    if (m.frame_count == 0) throw ParseError("manifest.json: frame_count must be >= 1");
    if (m.width < 1 || m.height < 1) throw ParseError("manifest.json: bad dimensions");
    if (m.format != "ppm" && m.format != "png")
        throw ParseError("manifest.json: unsupported format " + m.format);
    return m;
}

std::string manifest_to_json(const BundleManifest& m) {
    nlohmann::ordered_json j;
    j["fps"] = m.fps;
    j["width"] = m.width;
    j["height"] = m.height;
    j["frame_count"] = m.frame_count;
    j["format"] = m.format;
    return j.dump(2) + "\n";
}

DirFrameSource::DirFrameSource(fs::path dir) : dir_(std::move(dir)) {
    manifest_ = parse_manifest(read_file(dir_ / "manifest.json"));
}

RasterImage DirFrameSource::frame(size_t i) const {
    if (i >= manifest_.frame_count)
        throw InvalidInput("frame index out of range: " + std::to_string(i));
    RasterImage img = load_image(dir_ / frame_file_name(i, manifest_.format));
    if (img.width != manifest_.width || img.height != manifest_.height)
        throw ParseError("frame " + std::to_string(i) + ": size differs from manifest");
    return img;
}

ZipFrameSource::ZipFrameSource(std::vector<uint8_t> zip_bytes)
    : zip_(std::move(zip_bytes)) {
    if (!zip_.has("manifest.json"))
        throw ParseError("bundle: manifest.json missing");
    manifest_ = parse_manifest(zip_.read("manifest.json"));
}

std::string ZipFrameSource::frame_name(size_t i) const {
    return frame_file_name(i, manifest_.format);
}

std::vector<uint8_t> ZipFrameSource::frame_bytes(size_t i) const {
    if (i >= manifest_.frame_count)
        throw InvalidInput("frame index out of range: " + std::to_string(i));
    return zip_.read(frame_name(i));
}

RasterImage ZipFrameSource::frame(size_t i) const {
    RasterImage img = decode_image(frame_bytes(i));
    if (img.width != manifest_.width || img.height != manifest_.height)
        throw ParseError("frame " + std::to_string(i) + ": size differs from manifest");
    return img;
}

std::vector<uint8_t> pack_bundle(const std::vector<RasterImage>& frames, double fps,
                                 const std::string& format) {
    if (frames.empty()) throw InvalidInput("bundle needs at least one frame");
    BundleManifest m;
    m.fps = fps;
    m.width = frames[0].width;
    m.height = frames[0].height;
    m.frame_count = frames.size();
    m.format = format;

    std::vector<ZipEntrySpec> entries;
    entries.reserve(frames.size() + 1);
    std::string manifest = manifest_to_json(m);
    entries.push_back({"manifest.json",
                       std::vector<uint8_t>(manifest.begin(), manifest.end()), true});
    for (size_t i = 0; i < frames.size(); ++i) {
        if (frames[i].width != m.width || frames[i].height != m.height)
            throw InvalidInput("bundle frames must share one size");
        auto bytes = format == "png" ? encode_png(frames[i]) : encode_ppm(frames[i]);
        // PNG payloads are already compressed.
        entries.push_back({frame_file_name(i, format), std::move(bytes), format != "png"});
    }
    return zip_pack(entries);
}

std::string stage_media(const fs::path& file, const fs::path& incoming_root,
                        ObjectStore& store, Catalog& catalog) {
    std::error_code ec;
    fs::path rel = fs::relative(file, incoming_root, ec);
    std::string key = (ec || rel.empty()) ? file.filename().generic_string()
                                          : rel.generic_string();
    // A re-upload of the same path becomes a fresh record under a
    // disambiguated key; store keys stay unique in the catalog.
    if (catalog.find_by_store_key(key)) {
        fs::path p(key);
        std::string stem = (p.parent_path() / p.stem()).generic_string();
        std::string ext = p.extension().string();
        int n = 2;
        while (catalog.find_by_store_key(stem + "." + std::to_string(n) + ext)) ++n;
        key = stem + "." + std::to_string(n) + ext;
    }
    auto bytes = read_file(file);
    store.put(key, bytes); // throws: file stays in incoming for retry
    catalog.create_media(file.generic_string(), key);
    fs::remove(file);
    return key;
}

HashTimeline hash_media(const FrameSource& frames, double fps) {
    if (fps <= 0) throw InvalidInput("fps must be positive");
    size_t n = frames.count();
    if (n == 0) throw InvalidInput("frame source is empty");

    HashTimeline tl;
    tl.fps = fps;
    tl.entries.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        RasterImage img;
        try {
            img = frames.frame(i);
        } catch (const Error& e) {
            throw ParseError("frame " + std::to_string(i) + ": " + e.what());
        }
        tl.entries.push_back({static_cast<double>(i) / fps, compute_descriptor(img)});
    }
    return tl;
}

namespace {

struct HashKey {
    size_t operator()(const ColorLayoutHash& h) const {
        uint64_t x = 1469598103934665603ull; // FNV-1a
        for (uint16_t c : h.coeffs) {
            x ^= c;
            x *= 1099511628211ull;
        }
        return static_cast<size_t>(x);
    }
};

} // namespace

HashTimeline dedup_timeline(const HashTimeline& tl) {
    HashTimeline out;
    out.media = tl.media;
    out.fps = tl.fps;
    std::unordered_map<ColorLayoutHash, double, HashKey> last_retained;
    for (const auto& e : tl.entries) {
        auto it = last_retained.find(e.hash);
        if (it != last_retained.end() && e.t - it->second < kDedupWindowSeconds)
            continue;
        last_retained[e.hash] = e.t;
        out.entries.push_back(e);
    }
    return out;
}

size_t load_hashfile(const fs::path& path, VectorIndex& index, Catalog& catalog,
                     uint64_t media_id) {
    // Validates the HASHED -> LOADING step before any work happens.
    catalog.transition(media_id, MediaState::Loading);

    HashTimeline tl = dedup_timeline(read_hashfile(path));
    std::vector<VectorRecord> records;
    records.reserve(tl.entries.size());
    std::vector<uint32_t> codes(kHashWords);
    for (size_t i = 0; i < tl.entries.size(); ++i) {
        const auto& e = tl.entries[i];
        for (size_t d = 0; d < kHashWords; ++d) codes[d] = e.hash.coeffs[d];
        VectorRecord r;
        r.id = (media_id << 32) | static_cast<uint64_t>(i);
        r.media_id = media_id;
        r.t = e.t;
        r.vec = normalize_codes(codes);
        records.push_back(std::move(r));
    }
    index.insert_batch(records); // throws: record stays LOADING for retry
    catalog.transition(media_id, MediaState::Loaded);
    return records.size();
}

IngestPipeline::IngestPipeline(PipelineConfig cfg, ObjectStore& store, Catalog& catalog,
                               VectorIndex& index)
    : cfg_(std::move(cfg)), watcher_(cfg_.incoming_dir), store_(store),
      catalog_(catalog), index_(index) {
    fs::create_directories(cfg_.hash_dir);
}

std::unique_ptr<FrameSource> IngestPipeline::open_frames(const std::string& store_key) {
    if (cfg_.decoder_cmd.empty())
        return std::make_unique<ZipFrameSource>(store_.get(store_key));

    // External decoder: materialize the object, expand the command
    // template, expect the frame-sequence layout in the output directory.
    fs::path input = store_.materialize(store_key);
    fs::path outdir = fs::temp_directory_path() /
                      ("shotit_decode_" + std::to_string(::getpid()) + "_" +
                       fs::path(store_key).filename().string());
    fs::remove_all(outdir);
    fs::create_directories(outdir);

    std::string cmd = cfg_.decoder_cmd;
    auto replace_all = [](std::string& s, std::string_view from, const std::string& to) {
        for (size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos;
             pos += to.size())
            s.replace(pos, from.size(), to);
    };
    replace_all(cmd, "{input}", input.string());
    replace_all(cmd, "{outdir}", outdir.string());
    int rc = std::system(cmd.c_str());
    if (rc != 0)
        throw IoError("decoder command failed (exit " + std::to_string(rc) +
                      "): " + cmd);
    return std::make_unique<DirFrameSource>(outdir);
}

uint64_t IngestPipeline::process_file(const fs::path& file) {
    std::string key = stage_media(file, cfg_.incoming_dir, store_, catalog_);
    auto rec = catalog_.find_by_store_key(key);
    if (!rec) throw NotFoundError("staged media lost its catalog record: " + key);
    uint64_t media_id = rec->media_id;

    catalog_.transition(media_id, MediaState::Hashing);
    auto frames = open_frames(key);
    HashTimeline tl = hash_media(*frames, frames->fps());
    tl.media = key;
    catalog_.set_media_info(media_id, frames->fps(),
                            static_cast<double>(frames->count()) / frames->fps());

    fs::path hash_path = cfg_.hash_dir / (std::to_string(media_id) + ".xml.gz");
    write_hashfile(tl, hash_path);
    catalog_.transition(media_id, MediaState::Hashed);

    load_hashfile(hash_path, index_, catalog_, media_id);
    return media_id;
}

std::vector<uint64_t> IngestPipeline::run_once() {
    std::vector<uint64_t> done;
    for (const auto& file : watcher_.poll()) done.push_back(process_file(file));
    return done;
}

} // namespace shotit
