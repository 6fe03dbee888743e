#include "shotit/service.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

#include "shotit/descriptor.hpp"
#include "shotit/errors.hpp"
#include "shotit/image_io.hpp"
#include "shotit/pipeline.hpp"
#include "shotit/vectorize.hpp"

namespace shotit {

std::string format_ts(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s = buf;
    size_t last = s.find_last_not_of('0');
    if (s[last] == '.') --last;
    return s.substr(0, last + 1);
}

ClipRange snap_clip_range(std::span<const double> sums, double window_start_t,
                          double t_hit, double fps, double theta) {
    if (sums.empty()) throw InvalidInput("snap_clip_range: no luminance sums");
    if (fps <= 0) throw InvalidInput("snap_clip_range: fps must be positive");
    if (theta <= 0) throw InvalidInput("snap_clip_range: theta must be positive");

    const auto n = static_cast<long>(sums.size());
    long i0 = std::lround((t_hit - window_start_t) * fps);
    i0 = std::clamp(i0, 0l, n - 1);

    double mean = 0.0;
    for (double s : sums) mean += s;
    mean /= static_cast<double>(n);
    double threshold = theta * mean;

    double from = window_start_t;
    for (long i = i0; i >= 1; --i) {
        if (std::abs(sums[i] - sums[i - 1]) > threshold) {
            from = window_start_t + static_cast<double>(i) / fps;
            break;
        }
    }
    double to = window_start_t + static_cast<double>(n - 1) / fps;
    for (long i = i0; i + 1 < n; ++i) {
        if (std::abs(sums[i + 1] - sums[i]) > threshold) {
            to = window_start_t + static_cast<double>(i) / fps;
            break;
        }
    }
    // The hit itself always stays inside the range.
    return {std::min(from, t_hit), std::max(to, t_hit)};
}

SearchService::SearchService(VectorIndex& index, Catalog& catalog, ObjectStore& store,
                             Config cfg)
    : index_(index), catalog_(catalog), store_(store), cfg_(std::move(cfg)) {}

SearchResponse SearchService::handle_search(const SearchRequest& req) const {
    if (req.top_k < 1 || req.top_k > kMaxTopK)
        throw DomainError("topK must be in [1, " + std::to_string(kMaxTopK) + "], got " +
                          std::to_string(req.top_k));

    RasterImage img = decode_image(req.image);
    if (req.cut_borders) img = cut_borders(img).first;

    ColorLayoutHash hash = compute_descriptor(img);
    std::vector<uint32_t> codes(hash.coeffs.begin(), hash.coeffs.end());
    FeatureVector q = normalize_codes(codes);

    if (index_.size() == 0) return SearchResponse{0, {}};

    std::vector<SearchHit> hits;
    if (cfg_.search_engine == "ivf" && index_.trained()) {
        uint32_t nlist = index_.nlist();
        uint32_t nprobe = cfg_.nprobe ? cfg_.nprobe : index_.default_nprobe();
        nprobe = std::clamp<uint32_t>(nprobe, 1, nlist);
        hits = index_.search_ivf(q, static_cast<size_t>(req.top_k), nprobe);
    } else {
        hits = index_.search_flat(q, static_cast<size_t>(req.top_k));
    }
    return assemble_results(hits);
}

ClipRange SearchService::clip_range_for(const MediaRecord& media, double t_hit) const {
    double duration = media.duration > 0 ? media.duration : t_hit + cfg_.clip_window_s;
    double w_from = std::max(0.0, t_hit - cfg_.clip_window_s);
    double w_to = std::min(duration, t_hit + cfg_.clip_window_s);

    if (media.fps > 0) {
        try {
            ZipFrameSource frames(store_.get(media.store_key));
            long first = std::max(0l, std::lround(w_from * media.fps));
            long last = std::min(static_cast<long>(frames.count()) - 1,
                                 std::lround(w_to * media.fps));
            if (first <= last) {
                std::vector<double> sums;
                sums.reserve(static_cast<size_t>(last - first + 1));
                for (long i = first; i <= last; ++i)
                    sums.push_back(luminance_sum(frames.frame(static_cast<size_t>(i))));
                ClipRange r = snap_clip_range(sums, static_cast<double>(first) / media.fps,
                                              t_hit, media.fps, cfg_.theta);
                r.from = std::clamp(r.from, 0.0, duration);
                r.to = std::clamp(r.to, r.from, duration);
                return r;
            }
        } catch (const Error&) {
            // Fall through to the plain window: clip snapping is an
            // optimization, not a reason to fail the search.
        }
    }
    return {w_from, w_to};
}

SearchResponse SearchService::assemble_results(std::span<const SearchHit> hits) const {
    SearchResponse resp;
    resp.frame_count = index_.size();
    for (const auto& hit : hits) {
        MediaRecord media;
        try {
            media = catalog_.get(hit.media_id);
        } catch (const NotFoundError&) {
            std::fprintf(stderr, "shotit: dropping hit for unknown media %llu\n",
                         static_cast<unsigned long long>(hit.media_id));
            continue;
        }
        ClipRange clip = clip_range_for(media, hit.t);
        ResultRow row;
        row.media_id = hit.media_id;
        row.filename = std::filesystem::path(media.source_path).filename().string();
        row.from = clip.from;
        row.to = clip.to;
        row.at = hit.t;
        row.similarity = std::clamp(hit.score, 0.0, 1.0);
        std::string id = std::to_string(hit.media_id);
        row.video_url = cfg_.media_base_url + "/video/" + id +
                        "?from=" + format_ts(clip.from) + "&to=" + format_ts(clip.to);
        row.image_url = cfg_.media_base_url + "/image/" + id + "?t=" + format_ts(hit.t);
        resp.results.push_back(std::move(row));
    }
    return resp;
}

std::vector<uint8_t> SearchService::media_image_png(uint64_t media_id, double t) const {
    MediaRecord media = catalog_.get(media_id);
    if (media.state != MediaState::Loaded)
        throw NotFoundError("media " + std::to_string(media_id) + " is not LOADED");
    if (media.fps <= 0) throw NotFoundError("media has no frame metadata");

    ZipFrameSource frames(store_.get(media.store_key));
    long idx = std::clamp(std::lround(t * media.fps), 0l,
                          static_cast<long>(frames.count()) - 1);
    return encode_png(frames.frame(static_cast<size_t>(idx)));
}

namespace {

std::string read_stderr_excerpt(const std::filesystem::path& p) {
    std::string txt;
    try {
        auto bytes = read_file(p);
        txt.assign(bytes.begin(), bytes.end());
    } catch (const Error&) {
        return "";
    }
    if (txt.size() > 512) txt = txt.substr(txt.size() - 512);
    return txt;
}

} // namespace

std::vector<uint8_t> SearchService::media_video_clip(uint64_t media_id, double from,
                                                     double to,
                                                     std::string* content_type) const {
    if (from < 0 || to < from)
        throw InvalidInput("clip range requires 0 <= from <= to");
    MediaRecord media = catalog_.get(media_id);
    if (media.state != MediaState::Loaded)
        throw NotFoundError("media " + std::to_string(media_id) + " is not LOADED");

    if (!cfg_.clipper_cmd.empty()) {
        std::filesystem::path store_path = store_.materialize(media.store_key);
        std::filesystem::path err_file =
            std::filesystem::temp_directory_path() /
            ("shotit_clip_err_" + std::to_string(media_id) + ".log");

        std::string cmd = cfg_.clipper_cmd;
        auto replace_all = [](std::string& s, std::string_view k, const std::string& v) {
            for (size_t pos = 0; (pos = s.find(k, pos)) != std::string::npos;
                 pos += v.size())
                s.replace(pos, k.size(), v);
        };
        replace_all(cmd, "{store_path}", store_path.string());
        replace_all(cmd, "{from}", format_ts(from));
        replace_all(cmd, "{to}", format_ts(to));
        cmd = "( " + cmd + " ) 2>" + err_file.string();

        FILE* pipe = ::popen(cmd.c_str(), "r");
        if (!pipe) throw UpstreamError("clipper could not be started");
        std::vector<uint8_t> out;
        uint8_t buf[1 << 16];
        size_t n;
        while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0)
            out.insert(out.end(), buf, buf + n);
        int rc = ::pclose(pipe);
        if (rc != 0)
            throw UpstreamError("clipper exited with status " + std::to_string(rc) +
                                ": " + read_stderr_excerpt(err_file));
        if (content_type) *content_type = "application/octet-stream";
        return out;
    }

    // No clipper: return the stored frames of the range as a ZIP.
    ZipFrameSource frames(store_.get(media.store_key));
    double fps = frames.fps();
    long first = std::clamp(static_cast<long>(std::ceil(from * fps - 1e-9)), 0l,
                            static_cast<long>(frames.count()) - 1);
    long last = std::clamp(static_cast<long>(std::floor(to * fps + 1e-9)), first,
                           static_cast<long>(frames.count()) - 1);
    std::vector<ZipEntrySpec> entries;
    for (long i = first; i <= last; ++i) {
        auto idx = static_cast<size_t>(i);
        entries.push_back({frames.frame_name(idx), frames.frame_bytes(idx), false});
    }
    if (content_type) *content_type = "application/zip";
    return zip_pack(entries);
}

} // namespace shotit
