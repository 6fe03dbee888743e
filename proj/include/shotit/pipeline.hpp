#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "shotit/catalog.hpp"
#include "shotit/hashfile.hpp"
#include "shotit/object_store.hpp"
#include "shotit/raster.hpp"
#include "shotit/vecindex.hpp"
#include "shotit/zipfile.hpp"

namespace shotit {

// Polls a directory and reports each file once its size has been stable
// across two consecutive polls.
class IncomingWatcher {
public:
    explicit IncomingWatcher(std::filesystem::path dir); // IoError if unreadable
    // One scan; returns the files that just became stable.
    std::vector<std::filesystem::path> poll();

private:
    std::filesystem::path dir_;
    std::map<std::filesystem::path, uintmax_t> last_size_;
    std::map<std::filesystem::path, bool> emitted_;
};

// Source of decoded frames at a fixed rate.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual size_t count() const = 0;
    virtual RasterImage frame(size_t i) const = 0;
    virtual double fps() const = 0;
};

// Frame-sequence layout: manifest.json {fps, width, height, frame_count,
// format} plus frame_000000.<format> files.
struct BundleManifest {
    double fps = 0.0;
    int width = 0;
    int height = 0;
    size_t frame_count = 0;
    std::string format = "ppm"; // "ppm" | "png"
};

std::string frame_file_name(size_t index, const std::string& format);
BundleManifest parse_manifest(std::span<const uint8_t> json_bytes);
std::string manifest_to_json(const BundleManifest& m);

// Directory of frames + manifest.json.
class DirFrameSource : public FrameSource {
public:
    explicit DirFrameSource(std::filesystem::path dir);
    size_t count() const override { return manifest_.frame_count; }
    RasterImage frame(size_t i) const override;
    double fps() const override { return manifest_.fps; }

private:
    std::filesystem::path dir_;
    BundleManifest manifest_;
};

// ZIP bundle of the same layout; the unit a media file in the incoming
// directory is expected to be (unless an external decoder is configured).
class ZipFrameSource : public FrameSource {
public:
    explicit ZipFrameSource(std::vector<uint8_t> zip_bytes);
    size_t count() const override { return manifest_.frame_count; }
    RasterImage frame(size_t i) const override;
    double fps() const override { return manifest_.fps; }
    const BundleManifest& manifest() const { return manifest_; }
    std::vector<uint8_t> frame_bytes(size_t i) const;
    std::string frame_name(size_t i) const;

private:
    ZipArchive zip_;
    BundleManifest manifest_;
};

// Packs frames into a ZIP bundle (manifest + numbered frame files).
std::vector<uint8_t> pack_bundle(const std::vector<RasterImage>& frames, double fps,
                                 const std::string& format = "ppm");

// Uploads one incoming file into the store under its path-derived key,
// creates the catalog record, removes the source file. On store failure
// the file stays put for a retry.
std::string stage_media(const std::filesystem::path& file,
                        const std::filesystem::path& incoming_root,
                        ObjectStore& store, Catalog& catalog);

// Hashes every frame: entry i is (i / fps, descriptor(frame i)).
HashTimeline hash_media(const FrameSource& frames, double fps);

// Drops an entry iff an identical hash was retained within the preceding
// 2.0 seconds (strict). First occurrences always survive.
HashTimeline dedup_timeline(const HashTimeline& tl);

inline constexpr double kDedupWindowSeconds = 2.0;

// HASHED -> LOADING -> (dedup, vectorize, insert) -> LOADED.
// Returns the number of vectors inserted.
size_t load_hashfile(const std::filesystem::path& path, VectorIndex& index,
                     Catalog& catalog, uint64_t media_id);

struct PipelineConfig {
    std::filesystem::path incoming_dir;
    std::filesystem::path hash_dir;
    std::string decoder_cmd; // optional: "{input}" "{outdir}" placeholders
};

// One-shot driver for the index side: watch, stage, hash, load.
class IngestPipeline {
public:
    IngestPipeline(PipelineConfig cfg, ObjectStore& store, Catalog& catalog,
                   VectorIndex& index);

    // Polls once and fully processes every newly stable file.
    // Returns the media ids that reached LOADED.
    std::vector<uint64_t> run_once();

    // stage -> hash -> load for a single file.
    uint64_t process_file(const std::filesystem::path& file);

private:
    std::unique_ptr<FrameSource> open_frames(const std::string& store_key);

    PipelineConfig cfg_;
    IncomingWatcher watcher_;
    ObjectStore& store_;
    Catalog& catalog_;
    VectorIndex& index_;
};

} // namespace shotit
