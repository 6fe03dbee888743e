#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shotit/catalog.hpp"
#include "shotit/config.hpp"
#include "shotit/object_store.hpp"
#include "shotit/vecindex.hpp"

namespace shotit {

struct SearchRequest {
    std::vector<uint8_t> image; // PNG or PPM bytes
    bool cut_borders = true;
    int top_k = 10; // [1, 100]
};

inline constexpr int kMaxTopK = 100;

struct ResultRow {
    uint64_t media_id = 0;
    std::string filename;
    double from = 0.0;
    double to = 0.0;
    double at = 0.0;
    double similarity = 0.0; // clamped to [0, 1]
    std::string video_url;
    std::string image_url;
};

struct SearchResponse {
    uint64_t frame_count = 0; // total indexed vectors
    std::vector<ResultRow> results;
};

struct ClipRange {
    double from = 0.0;
    double to = 0.0;
};

// Scene snap: from the frame nearest t_hit, walk outward until the first
// neighbouring pair whose luminance-sum difference exceeds theta * mean;
// the changed frame stays outside the range. window_start_t is the
// timestamp of sums[0].
ClipRange snap_clip_range(std::span<const double> sums, double window_start_t,
                          double t_hit, double fps, double theta);

// Query-side engine: image in, ranked media/timestamp rows out.
class SearchService {
public:
    SearchService(VectorIndex& index, Catalog& catalog, ObjectStore& store, Config cfg);

    SearchResponse handle_search(const SearchRequest& req) const;

    // Ranked hits -> response rows with clip ranges and URLs; hits whose
    // media is unknown are dropped.
    SearchResponse assemble_results(std::span<const SearchHit> hits) const;

    // Nearest stored frame at t, rendered as PNG.
    std::vector<uint8_t> media_image_png(uint64_t media_id, double t) const;

    // Video clip bytes for [from, to]: output of the configured clipper
    // command, or a ZIP of the stored frames when none is configured.
    // content_type receives the MIME type.
    std::vector<uint8_t> media_video_clip(uint64_t media_id, double from, double to,
                                          std::string* content_type) const;

    const Config& config() const { return cfg_; }
    const VectorIndex& index() const { return index_; }
    Catalog& catalog() const { return catalog_; }

private:
    ClipRange clip_range_for(const MediaRecord& media, double t_hit) const;

    VectorIndex& index_;
    Catalog& catalog_;
    ObjectStore& store_;
    Config cfg_;
};

// Compact decimal formatting for timestamps in URLs ("12.5", "0.042").
std::string format_ts(double v);

} // namespace shotit
